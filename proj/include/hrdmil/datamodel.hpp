#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hrdmil/common.hpp"

namespace hrdmil {

// n x d patch feature matrix for one slide (row-major, 32-bit floats), with
// optional per-patch tile-grid coordinates.
struct PatchMatrix {
    uint32_t n_patches = 0;
    uint32_t dim = 0;
    std::vector<float> features;   // n_patches * dim, row-major
    std::vector<int32_t> coords;   // empty, or n_patches * 2 row-major

    bool has_coords() const { return !coords.empty(); }

    std::span<const float> row(uint32_t i) const {
        return {features.data() + static_cast<size_t>(i) * dim, dim};
    }
    float at(uint32_t i, uint32_t j) const {
        return features[static_cast<size_t>(i) * dim + j];
    }
    int32_t coord(uint32_t i, uint32_t axis) const {
        return coords[static_cast<size_t>(i) * 2 + axis];
    }

    // Throws on any invariant violation (n>=1, d>=1, sizes, finite values).
    void validate() const;
};

// All patches of one patient (slides concatenated in manifest order) plus
// the continuous HRD target.
struct PatientBag {
    std::string patient_id;
    PatchMatrix matrix;  // row count == B, the total bag size
    double hrd_score = 0.0;

    uint32_t size() const { return matrix.n_patches; }
};

struct PatientRecord {
    std::string id;
    double hrd_score = 0.0;
    std::vector<std::string> files;  // resolved paths
};

struct Cohort {
    std::string name;
    std::vector<PatientRecord> patients;
    uint32_t dim = 0;  // shared feature dimension across all referenced files

    const PatientRecord* find(const std::string& patient_id) const;
};

// A sampled fixed-size bag tied to one patient; the unit of training.
struct Instance {
    std::string patient_id;
    PatchMatrix matrix;
    double target = 0.0;
    std::vector<uint32_t> source_rows;  // original bag row per instance row

    uint32_t size() const { return matrix.n_patches; }
};

// ---------------------------------------------------------------------------
// Binary feature file ("MILF"):
//   magic "MILF" | version u16=1 LE | flags u16 LE (bit0 = coords present)
//   | n_patches u32 LE | dim u32 LE
//   | features f32 LE row-major n*d | [coords i32 LE row-major n*2]
// Round trips are bit-exact.
// ---------------------------------------------------------------------------

PatchMatrix read_feature_file(const std::string& path);
void write_feature_file(const std::string& path, const PatchMatrix& m);

// Peeks the header only; used for cheap dim validation at manifest load.
struct FeatureFileHeader {
    uint16_t version;
    bool has_coords;
    uint32_t n_patches;
    uint32_t dim;
};
FeatureFileHeader read_feature_header(const std::string& path);

// Manifest: JSON {"cohort": str, "patients": [{"id", "hrd_score", "files": [..]}]}.
// Relative file paths resolve against the manifest's directory.
Cohort load_manifest(const std::string& path);
void write_manifest(const std::string& path, const Cohort& cohort);

// Concatenates the patient's feature files in manifest order.
PatientBag build_patient_bag(const Cohort& cohort, const std::string& patient_id);

// CSV rows of `dim` floats, optionally followed by 2 integer coordinate
// fields (all rows must agree on the trailing-coords choice).
PatchMatrix import_csv(const std::string& path, uint32_t dim);

}  // namespace hrdmil
