#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsereg {

enum class Axis { x = 0, y = 1, z = 2 };

const char* axis_name(Axis a);
Axis axis_from_name(const std::string& name);

struct GridSize {
    int x = 0;
    int y = 0;
    int z = 0;

    friend bool operator==(const GridSize&, const GridSize&) = default;

    std::int64_t voxel_count() const {
        return static_cast<std::int64_t>(x) * y * z;
    }
    int along(Axis a) const {
        return a == Axis::x ? x : (a == Axis::y ? y : z);
    }
    int min_dim() const { return x < y ? (x < z ? x : z) : (y < z ? y : z); }
    std::string to_string() const;
};

struct Spacing {
    float x = 1.0f;
    float y = 1.0f;
    float z = 1.0f;

    friend bool operator==(const Spacing&, const Spacing&) = default;
};

// Errors. The CLI maps these onto its exit-code contract:
// input problems -> 2, numeric divergence -> 3, file problems -> 4.
class InvalidInputError : public std::runtime_error {
public:
    explicit InvalidInputError(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateMaskError : public InvalidInputError {
public:
    explicit DegenerateMaskError(const std::string& what) : InvalidInputError(what) {}
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int iteration)
        : std::runtime_error(what), iteration(iteration) {}
    int iteration = -1;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::string& what, std::int64_t byte_offset = -1)
        : std::runtime_error(what), byte_offset(byte_offset) {}
    std::int64_t byte_offset = -1;
};

class UnsupportedFileError : public IoError {
public:
    explicit UnsupportedFileError(const std::string& what) : IoError(what) {}
};

// Dense 3D scalar grid, x-fastest linear layout. Intensities are stored in
// 32-bit floats; loss and statistics accumulation happens in 64-bit.
struct Volume {
    GridSize size;
    Spacing spacing;
    std::vector<float> data;

    Volume() = default;
    Volume(GridSize s, float fill = 0.0f, Spacing sp = {})
        : size(s), spacing(sp), data(static_cast<std::size_t>(s.voxel_count()), fill) {}

    std::int64_t index(int x, int y, int z) const {
        return (static_cast<std::int64_t>(z) * size.y + y) * size.x + x;
    }
    float at(int x, int y, int z) const { return data[index(x, y, z)]; }
    float& at(int x, int y, int z) { return data[index(x, y, z)]; }

    // Checks the construction invariants: data length, finite intensities,
    // positive spacing. Used at I/O and CLI boundaries.
    void validate(const std::string& context) const;
};

// Per-voxel confidence weights in [0,1]; continuous values permitted.
struct ConfidenceMask {
    GridSize size;
    std::vector<float> weights;

    ConfidenceMask() = default;
    ConfidenceMask(GridSize s, float fill = 0.0f)
        : size(s), weights(static_cast<std::size_t>(s.voxel_count()), fill) {}

    std::int64_t index(int x, int y, int z) const {
        return (static_cast<std::int64_t>(z) * size.y + y) * size.x + x;
    }
    float at(int x, int y, int z) const { return weights[index(x, y, z)]; }
    float& at(int x, int y, int z) { return weights[index(x, y, z)]; }

    double total_weight() const;
    void validate(const std::string& context) const;
};

// Integer anatomical segmentation; label 0 is background.
struct LabelMap {
    GridSize size;
    std::vector<std::int32_t> labels;

    LabelMap() = default;
    explicit LabelMap(GridSize s, std::int32_t fill = 0)
        : size(s), labels(static_cast<std::size_t>(s.voxel_count()), fill) {}

    std::int64_t index(int x, int y, int z) const {
        return (static_cast<std::int64_t>(z) * size.y + y) * size.x + x;
    }
    std::int32_t at(int x, int y, int z) const { return labels[index(x, y, z)]; }
    std::int32_t& at(int x, int y, int z) { return labels[index(x, y, z)]; }

    void validate(const std::string& context) const;
};

// Records which slices along an axis were actually acquired (the rest are
// interpolated). Indices are strictly increasing.
struct SliceAcquisitionPattern {
    Axis axis = Axis::z;
    std::vector<int> indices;

    void validate(int axis_dim, const std::string& context) const;
    bool contains(int slice) const;
};

// Per-voxel displacement u in voxel units of the fixed grid; the sampling
// location in the moving image is p + u(p). Stored as doubles so that the
// optimizer and the finite-difference checks run fully in 64-bit.
struct DisplacementField {
    GridSize size;
    std::vector<double> ux, uy, uz;

    DisplacementField() = default;
    explicit DisplacementField(GridSize s)
        : size(s),
          ux(static_cast<std::size_t>(s.voxel_count()), 0.0),
          uy(static_cast<std::size_t>(s.voxel_count()), 0.0),
          uz(static_cast<std::size_t>(s.voxel_count()), 0.0) {}

    std::int64_t index(int x, int y, int z) const {
        return (static_cast<std::int64_t>(z) * size.y + y) * size.x + x;
    }

    std::vector<double>& component(int c) { return c == 0 ? ux : (c == 1 ? uy : uz); }
    const std::vector<double>& component(int c) const {
        return c == 0 ? ux : (c == 1 ? uy : uz);
    }

    double max_abs() const;
    void validate(const std::string& context) const;
};

void require(bool condition, const std::string& message);

inline void require_same_dims(const GridSize& a, const GridSize& b, const std::string& context) {
    if (!(a == b)) {
        throw InvalidInputError(context + ": dimension mismatch " + a.to_string() + " vs " +
                                b.to_string());
    }
}

}  // namespace sparsereg
