#pragma once

#include <string>

#include "sparsereg/types.hpp"

namespace sparsereg {

// Native container (.svr): a UTF-8 text header of "key: value" lines
// terminated by a blank line, followed by a little-endian raw payload.
// Header keys are written in a fixed order so writes are deterministic:
//   format, role, dtype, dims, spacing, components.
// Roles: intensity (f32/i16/u16), mask (f32, values in [0,1]),
// labels (u16/i16, non-negative), field (f32, 3 interleaved components).

void write_svr(const std::string& path, const Volume& vol);
void write_svr(const std::string& path, const ConfidenceMask& mask);
void write_svr(const std::string& path, const LabelMap& labels);
void write_svr(const std::string& path, const DisplacementField& field);

Volume read_svr_volume(const std::string& path);
ConfidenceMask read_svr_mask(const std::string& path);
LabelMap read_svr_labels(const std::string& path);
DisplacementField read_svr_field(const std::string& path);

// Minimal NIfTI-1 import: uncompressed single-file images with magic "n+1",
// datatype i16 or f32, dim[0] == 3. Values are scaled by scl_slope/scl_inter
// when scl_slope is nonzero.
Volume read_nifti1(const std::string& path);
LabelMap read_nifti1_labels(const std::string& path);

// Acquisition patterns as a small text sidecar ("axis: z" / "indices: ...").
void write_pattern(const std::string& path, const SliceAcquisitionPattern& pattern);
SliceAcquisitionPattern read_pattern(const std::string& path);

}  // namespace sparsereg
