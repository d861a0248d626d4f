#include "hrdmil/datamodel.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace hrdmil {

namespace {

constexpr char kMagic[4] = {'M', 'I', 'L', 'F'};
constexpr uint16_t kVersion = 1;
constexpr uint16_t kFlagCoords = 0x0001;
constexpr uint16_t kKnownFlags = kFlagCoords;

void put_u16le(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32le(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint16_t get_u16le(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t get_u32le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::Io, "cannot open feature file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FeatureFileHeader parse_header(const std::string& bytes, const std::string& path) {
    if (bytes.size() < 16) fail(ErrorCategory::Format, "truncated header in " + path);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        fail(ErrorCategory::Format, "bad magic in " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    FeatureFileHeader h;
    h.version = get_u16le(p + 4);
    uint16_t flags = get_u16le(p + 6);
    h.n_patches = get_u32le(p + 8);
    h.dim = get_u32le(p + 12);
    if (h.version != kVersion)
        fail(ErrorCategory::Format,
             "unsupported feature file version " + std::to_string(h.version) + " in " + path);
    if (flags & ~kKnownFlags)
        fail(ErrorCategory::Format, "unknown flags in " + path);
    h.has_coords = (flags & kFlagCoords) != 0;
    return h;
}

}  // namespace

void PatchMatrix::validate() const {
    if (n_patches < 1) fail(ErrorCategory::Validation, "patch matrix must have at least one row");
    if (dim < 1) fail(ErrorCategory::Validation, "patch matrix must have dim >= 1");
    if (features.size() != static_cast<size_t>(n_patches) * dim)
        fail(ErrorCategory::Validation, "feature buffer size does not match n_patches * dim");
    if (!coords.empty() && coords.size() != static_cast<size_t>(n_patches) * 2)
        fail(ErrorCategory::Validation, "coords must have exactly n_patches rows");
    for (float v : features)
        if (!std::isfinite(v)) fail(ErrorCategory::Validation, "non-finite feature value");
}

const PatientRecord* Cohort::find(const std::string& patient_id) const {
    for (const auto& p : patients)
        if (p.id == patient_id) return &p;
    return nullptr;
}

FeatureFileHeader read_feature_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::Io, "cannot open feature file: " + path);
    std::string head(16, '\0');
    in.read(head.data(), 16);
    if (in.gcount() < 16) fail(ErrorCategory::Format, "truncated header in " + path);
    return parse_header(head, path);
}

PatchMatrix read_feature_file(const std::string& path) {
    std::string bytes = read_all(path);
    FeatureFileHeader h = parse_header(bytes, path);

    size_t feat_bytes = static_cast<size_t>(h.n_patches) * h.dim * 4;
    size_t coord_bytes = h.has_coords ? static_cast<size_t>(h.n_patches) * 2 * 4 : 0;
    size_t expected = 16 + feat_bytes + coord_bytes;
    if (bytes.size() < expected) fail(ErrorCategory::Format, "truncated payload in " + path);
    if (bytes.size() > expected) fail(ErrorCategory::Format, "trailing bytes in " + path);

    PatchMatrix m;
    m.n_patches = h.n_patches;
    m.dim = h.dim;
    m.features.resize(static_cast<size_t>(h.n_patches) * h.dim);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + 16;
    for (size_t i = 0; i < m.features.size(); ++i, p += 4)
        m.features[i] = std::bit_cast<float>(get_u32le(p));
    if (h.has_coords) {
        m.coords.resize(static_cast<size_t>(h.n_patches) * 2);
        for (size_t i = 0; i < m.coords.size(); ++i, p += 4)
            m.coords[i] = static_cast<int32_t>(get_u32le(p));
    }
    m.validate();
    return m;
}

void write_feature_file(const std::string& path, const PatchMatrix& m) {
    m.validate();
    std::string out;
    out.reserve(16 + m.features.size() * 4 + m.coords.size() * 4);
    out.append(kMagic, 4);
    put_u16le(out, kVersion);
    put_u16le(out, m.has_coords() ? kFlagCoords : 0);
    put_u32le(out, m.n_patches);
    put_u32le(out, m.dim);
    for (float v : m.features) put_u32le(out, std::bit_cast<uint32_t>(v));
    for (int32_t v : m.coords) put_u32le(out, static_cast<uint32_t>(v));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCategory::Io, "cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) fail(ErrorCategory::Io, "write failed: " + path);
}

Cohort load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot open manifest: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::Format, std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("cohort") || !doc.contains("patients"))
        fail(ErrorCategory::Format, "manifest must be an object with 'cohort' and 'patients'");

    fs::path base = fs::path(path).parent_path();
    Cohort cohort;
    cohort.name = doc.at("cohort").get<std::string>();

    std::set<std::string> seen_ids;
    for (const auto& pj : doc.at("patients")) {
        if (!pj.contains("id") || !pj.contains("hrd_score") || !pj.contains("files"))
            fail(ErrorCategory::Format, "patient entry missing id/hrd_score/files");
        PatientRecord rec;
        rec.id = pj.at("id").get<std::string>();
        if (!pj.at("hrd_score").is_number())
            fail(ErrorCategory::Format, "hrd_score must be a number for patient " + rec.id);
        rec.hrd_score = pj.at("hrd_score").get<double>();
        if (!std::isfinite(rec.hrd_score))
            fail(ErrorCategory::Validation, "non-finite hrd_score for patient " + rec.id);
        if (rec.hrd_score < 0.0)
            fail(ErrorCategory::Validation, "negative hrd_score for patient " + rec.id);
        if (!seen_ids.insert(rec.id).second)
            fail(ErrorCategory::Validation, "duplicate patient id: " + rec.id);
        for (const auto& fj : pj.at("files")) {
            fs::path fp = fj.get<std::string>();
            if (fp.is_relative()) fp = base / fp;
            rec.files.push_back(fp.string());
        }
        if (rec.files.empty())
            fail(ErrorCategory::Validation, "patient " + rec.id + " lists no feature files");
        cohort.patients.push_back(std::move(rec));
    }
    if (cohort.patients.empty())
        fail(ErrorCategory::Validation, "manifest lists no patients");

    // Validate existence and a single shared dim across all referenced files.
    for (const auto& rec : cohort.patients) {
        for (const auto& f : rec.files) {
            if (!fs::exists(f)) fail(ErrorCategory::Io, "missing feature file: " + f);
            FeatureFileHeader h = read_feature_header(f);
            if (cohort.dim == 0) {
                cohort.dim = h.dim;
            } else if (h.dim != cohort.dim) {
                fail(ErrorCategory::Dimension,
                     "dim mismatch: " + f + " has dim " + std::to_string(h.dim) +
                         ", expected " + std::to_string(cohort.dim));
            }
        }
    }
    return cohort;
}

void write_manifest(const std::string& path, const Cohort& cohort) {
    nlohmann::ordered_json doc;
    doc["cohort"] = cohort.name;
    doc["patients"] = nlohmann::ordered_json::array();
    fs::path base = fs::path(path).parent_path();
    for (const auto& rec : cohort.patients) {
        nlohmann::ordered_json pj;
        pj["id"] = rec.id;
        pj["hrd_score"] = rec.hrd_score;
        auto files = nlohmann::ordered_json::array();
        for (const auto& f : rec.files) {
            // Store relative to the manifest when possible; keeps cohorts movable.
            std::error_code ec;
            fs::path rel = fs::relative(f, base, ec);
            files.push_back(ec ? f : rel.generic_string());
        }
        pj["files"] = files;
        doc["patients"].push_back(pj);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCategory::Io, "cannot open for writing: " + path);
    out << doc.dump(2) << "\n";
}

PatientBag build_patient_bag(const Cohort& cohort, const std::string& patient_id) {
    const PatientRecord* rec = cohort.find(patient_id);
    if (!rec) fail(ErrorCategory::Validation, "unknown patient id: " + patient_id);

    PatientBag bag;
    bag.patient_id = rec->id;
    bag.hrd_score = rec->hrd_score;

    bool first = true;
    bool want_coords = false;
    for (const auto& f : rec->files) {
        PatchMatrix part = read_feature_file(f);
        if (first) {
            bag.matrix.dim = part.dim;
            want_coords = part.has_coords();
            first = false;
        } else if (part.dim != bag.matrix.dim) {
            fail(ErrorCategory::Dimension, "dim mismatch within patient " + patient_id);
        } else if (part.has_coords() != want_coords) {
            // Coordinates are all-or-nothing per patient; a partial set cannot
            // feed the spatial aggregator.
            fail(ErrorCategory::Validation,
                 "inconsistent coords presence across files of patient " + patient_id);
        }
        bag.matrix.n_patches += part.n_patches;
        bag.matrix.features.insert(bag.matrix.features.end(), part.features.begin(),
                                   part.features.end());
        if (want_coords)
            bag.matrix.coords.insert(bag.matrix.coords.end(), part.coords.begin(),
                                     part.coords.end());
    }
    bag.matrix.validate();
    return bag;
}

PatchMatrix import_csv(const std::string& path, uint32_t dim) {
    if (dim < 1) fail(ErrorCategory::Usage, "import_csv: dim must be >= 1");
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot open csv: " + path);

    PatchMatrix m;
    m.dim = dim;
    int coords_state = -1;  // -1 undecided, 0 no coords, 1 coords

    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Skip blank lines.
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string::npos
                                                    ? std::string::npos
                                                    : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }

        bool row_has_coords;
        if (fields.size() == dim) {
            row_has_coords = false;
        } else if (fields.size() == dim + 2) {
            row_has_coords = true;
        } else {
            fail(ErrorCategory::Format,
                 "ragged row at line " + std::to_string(lineno) + ": got " +
                     std::to_string(fields.size()) + " fields, expected " +
                     std::to_string(dim) + " or " + std::to_string(dim + 2));
        }
        if (coords_state == -1)
            coords_state = row_has_coords ? 1 : 0;
        else if ((coords_state == 1) != row_has_coords)
            fail(ErrorCategory::Format,
                 "ragged row at line " + std::to_string(lineno) +
                     ": inconsistent trailing coordinate fields");

        auto parse_double = [&](const std::string& s) {
            const char* b = s.data();
            const char* e = b + s.size();
            while (b < e && (*b == ' ' || *b == '\t')) ++b;
            while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
            double v;
            auto [ptr, ec] = std::from_chars(b, e, v);
            if (ec != std::errc() || ptr != e)
                fail(ErrorCategory::Format,
                     "non-numeric field '" + s + "' at line " + std::to_string(lineno));
            return v;
        };

        for (uint32_t j = 0; j < dim; ++j)
            m.features.push_back(static_cast<float>(parse_double(fields[j])));
        if (row_has_coords) {
            for (uint32_t j = 0; j < 2; ++j) {
                double v = parse_double(fields[dim + j]);
                if (v != std::floor(v))
                    fail(ErrorCategory::Format,
                         "coordinate field must be an integer at line " + std::to_string(lineno));
                m.coords.push_back(static_cast<int32_t>(v));
            }
        }
        ++m.n_patches;
    }
    if (m.n_patches == 0) fail(ErrorCategory::Validation, "csv has no data rows: " + path);
    m.validate();
    return m;
}

}  // namespace hrdmil
