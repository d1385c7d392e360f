#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include "json.hpp"

#include "decomp.hpp"
#include "errors.hpp"
#include "lamination.hpp"
#include "rootdata.hpp"

namespace chamberflow {

/// Shortest form is not used on purpose: 17 significant digits always
/// round-trip a double and keep column widths stable across runs.
inline std::string format_double(double v) { return fmt::format("{:.17g}", v); }

inline std::string sha1_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha1(), nullptr) != 1)
        throw NumericalFailure("cli", "sha1", "digest failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

/// Hash of content the way git names a blob: sha1("blob <size>\0" + content).
inline std::string git_blob_hash(std::string_view content) {
    std::string framed = "blob " + std::to_string(content.size());
    framed.push_back('\0');
    framed.append(content);
    return sha1_hex(framed);
}

/// Provenance header written ahead of every output as '#' comment lines.
struct RunManifest {
    std::string command_line;
    std::optional<std::uint64_t> seed;
    std::string input_hash;  // git blob hash of the canonical input description
    std::string anchor;      // which result of the theory the command exercises
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, std::string>> extra;

    std::string header() const {
        std::string s = "# chamberflow manifest\n";
        s += "# command: " + command_line + "\n";
        if (seed) s += "# seed: " + std::to_string(*seed) + "\n";
        s += "# input_hash: " + input_hash + "\n";
        s += "# anchor: " + anchor + "\n";
        for (const auto& o : outputs) s += "# output: " + o + "\n";
        for (const auto& [k, v] : extra) s += "# " + k + ": " + v + "\n";
        return s;
    }
};

/// CSV with a header row; numbers at 17 significant digits.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_double(v));
        add_cells(std::move(cells));
    }

    void add_cells(std::vector<std::string> cells) {
        if (cells.size() != columns_.size()) throw UsageError("csv: row width does not match header");
        rows_.push_back(std::move(cells));
    }

    std::size_t rows() const { return rows_.size(); }

    std::string str() const {
        std::string s = join(columns_);
        for (const auto& r : rows_) s += join(r);
        return s;
    }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) s += ',';
            s += cells[i];
        }
        return s + '\n';
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw UsageError("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <int N>
nlohmann::json matrix_json(const Matrix<N>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < N; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < N; ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

template <int N>
Matrix<N> matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) throw UsageError("json: bad matrix shape");
    Matrix<N> m;
    for (int i = 0; i < N; ++i) {
        if (!j[i].is_array() || j[i].size() != static_cast<std::size_t>(N)) throw UsageError("json: bad matrix shape");
        for (int k = 0; k < N; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

template <int N>
nlohmann::json root_data_json(const RootSystem<N>& rs) {
    auto vec = [](const ChamberVector<N>& v) { return nlohmann::json(v.coords); };
    nlohmann::json j;
    j["group"] = to_string(rs.group_id);
    j["rank"] = rs.rank;
    j["weyl_group_order"] = rs.weyl_group_order;
    j["rho"] = vec(rs.weyl_vector);
    j["rho_norm_sq"] = inner(rs.weyl_vector, rs.weyl_vector);
    for (const auto& a : rs.simple_roots) j["simple_roots"].push_back(vec(a.functional));
    for (const auto& a : rs.positive_roots) j["positive_roots"].push_back(vec(a.functional));
    j["simple_gram"] = rs.simple_gram();
    return j;
}

/// Lift samples as JSONL: metadata in the manifest, then one object per line.
inline std::string lift_jsonl(const LiftedSampleSet& set) {
    std::string s;
    for (const auto& smp : set.samples) {
        nlohmann::json j;
        j["representative"] = matrix_json(smp.point.point.representative.matrix());
        j["word"] = smp.point.point.word;
        j["mark"] = smp.point.mark.angle;
        j["next_mark"] = smp.next_mark.angle;
        j["horizon"] = smp.horizon;
        s += j.dump() + '\n';
    }
    return s;
}

inline nlohmann::json lift_metadata(const LiftedSampleSet& set) {
    nlohmann::json j;
    j["preset"] = set.group_name;
    j["n"] = set.n;
    j["seed"] = set.seed;
    j["step_length"] = set.step_length;
    j["theta0"] = set.theta0;
    j["fiber_rotation"] = set.fiber_rotation;
    j["count"] = set.samples.size();
    j["dictionary"] = dictionary_version;
    return j;
}

inline constexpr std::string_view lift_metadata_key = "lift";

/// Parses lift_jsonl output, including the '# lift: {...}' manifest line.
inline LiftedSampleSet read_lift_jsonl(const std::string& text) {
    LiftedSampleSet set;
    std::istringstream in(text);
    std::string line;
    const std::string meta_prefix = "# " + std::string(lift_metadata_key) + ": ";
    int line_no = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            if (line.rfind(meta_prefix, 0) == 0) {
                const auto m = nlohmann::json::parse(line.substr(meta_prefix.size()));
                set.group_name = m.at("preset").get<std::string>();
                set.n = m.at("n").get<int>();
                set.seed = m.at("seed").get<std::uint64_t>();
                set.step_length = m.at("step_length").get<double>();
                set.theta0 = m.at("theta0").get<double>();
                set.fiber_rotation = m.at("fiber_rotation").get<double>();
                continue;
            }
            if (line[0] == '#') continue;
            const auto j = nlohmann::json::parse(line);
            LiftedSample s;
            s.point.point.representative = GroupElement<2>::unchecked(matrix_from_json<2>(j.at("representative")));
            s.point.point.word = j.at("word").get<std::string>();
            s.point.mark = BoundaryPoint{j.at("mark").get<double>()};
            s.next_mark = BoundaryPoint{j.at("next_mark").get<double>()};
            s.horizon = j.at("horizon").get<int>();
            set.samples.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("lift file line " + std::to_string(line_no) + ": " + e.what());
    }
    if (set.group_name.empty()) throw UsageError("lift file has no '# lift:' metadata line");
    return set;
}

} // namespace chamberflow
