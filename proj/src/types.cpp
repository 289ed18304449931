#include "sparsereg/types.hpp"

#include <algorithm>
#include <cmath>

namespace sparsereg {

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        default: return "z";
    }
}

Axis axis_from_name(const std::string& name) {
    if (name == "x") return Axis::x;
    if (name == "y") return Axis::y;
    if (name == "z") return Axis::z;
    throw InvalidInputError("unknown axis '" + name + "' (expected x, y or z)");
}

std::string GridSize::to_string() const {
    return std::to_string(x) + "x" + std::to_string(y) + "x" + std::to_string(z);
}

void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidInputError(message);
}

void Volume::validate(const std::string& context) const {
    require(size.x > 0 && size.y > 0 && size.z > 0, context + ": non-positive dimensions");
    require(data.size() == static_cast<std::size_t>(size.voxel_count()),
            context + ": data length does not match dimensions");
    require(spacing.x > 0 && spacing.y > 0 && spacing.z > 0,
            context + ": spacing components must be strictly positive");
    for (float v : data) {
        if (!std::isfinite(v)) throw InvalidInputError(context + ": non-finite intensity");
    }
}

double ConfidenceMask::total_weight() const {
    double sum = 0.0;
    for (float w : weights) sum += w;
    return sum;
}

void ConfidenceMask::validate(const std::string& context) const {
    require(size.x > 0 && size.y > 0 && size.z > 0, context + ": non-positive dimensions");
    require(weights.size() == static_cast<std::size_t>(size.voxel_count()),
            context + ": weight length does not match dimensions");
    for (float w : weights) {
        if (!(w >= 0.0f && w <= 1.0f)) {
            throw InvalidInputError(context + ": mask weight " + std::to_string(w) +
                                    " outside [0,1]");
        }
    }
}

void LabelMap::validate(const std::string& context) const {
    require(size.x > 0 && size.y > 0 && size.z > 0, context + ": non-positive dimensions");
    require(labels.size() == static_cast<std::size_t>(size.voxel_count()),
            context + ": label length does not match dimensions");
    for (std::int32_t l : labels) {
        if (l < 0) throw InvalidInputError(context + ": negative label " + std::to_string(l));
    }
}

void SliceAcquisitionPattern::validate(int axis_dim, const std::string& context) const {
    require(!indices.empty(), context + ": acquisition pattern is empty");
    int prev = -1;
    for (int i : indices) {
        require(i > prev, context + ": acquisition indices not strictly increasing");
        require(i >= 0 && i < axis_dim,
                context + ": acquisition index " + std::to_string(i) + " outside [0," +
                    std::to_string(axis_dim - 1) + "]");
        prev = i;
    }
}

bool SliceAcquisitionPattern::contains(int slice) const {
    return std::binary_search(indices.begin(), indices.end(), slice);
}

double DisplacementField::max_abs() const {
    double m = 0.0;
    for (const auto* comp : {&ux, &uy, &uz}) {
        for (double v : *comp) m = std::max(m, std::fabs(v));
    }
    return m;
}

void DisplacementField::validate(const std::string& context) const {
    require(size.x > 0 && size.y > 0 && size.z > 0, context + ": non-positive dimensions");
    const auto n = static_cast<std::size_t>(size.voxel_count());
    require(ux.size() == n && uy.size() == n && uz.size() == n,
            context + ": component length does not match dimensions");
    for (const auto* comp : {&ux, &uy, &uz}) {
        for (double v : *comp) {
            if (!std::isfinite(v)) throw InvalidInputError(context + ": non-finite displacement");
        }
    }
}

}  // namespace sparsereg
