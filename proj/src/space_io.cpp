// SPDX-License-Identifier: MIT
#include "gkwpi/space_io.hpp"

#include "gkwpi/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gkwpi {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& what) {
    throw ValidationError("space description: " + what);
}

const json& field(const json& doc, const char* name) {
    if (!doc.contains(name)) schema_error(std::string("missing field '") + name + "'");
    return doc.at(name);
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) schema_error(where + " must be a number");
    return v.get<double>();
}

std::vector<double> number_array(const json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where + " must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<Partition> partitions(const json& v, const char* name, std::size_t atoms) {
    if (!v.is_array()) schema_error(std::string(name) + " must be an array of label arrays");
    std::vector<Partition> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const std::string where = std::string(name) + "[" + std::to_string(k) + "]";
        const json& row = v[k];
        if (!row.is_array() || row.size() != atoms) {
            schema_error(where + " must list one block label per atom (" + std::to_string(atoms) + ")");
        }
        std::vector<long long> labels;
        for (std::size_t i = 0; i < atoms; ++i) {
            if (!row[i].is_number_integer() || row[i].get<long long>() < 0) {
                schema_error(where + "[" + std::to_string(i) + "] must be a non-negative integer");
            }
            labels.push_back(row[i].get<long long>());
        }
        out.emplace_back(labels);
    }
    return out;
}

std::vector<std::vector<long long>> labels_of(const std::vector<Partition>& track) {
    std::vector<std::vector<long long>> out;
    for (const Partition& p : track) {
        std::vector<long long> row;
        for (std::size_t b : p.labels()) row.push_back(static_cast<long long>(b));
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

SpaceDocument parse_space(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        schema_error(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) schema_error("top level must be an object");

    const json& atoms = field(doc, "atoms");
    if (!atoms.is_array() || atoms.empty()) schema_error("'atoms' must be a non-empty array");
    std::vector<double> prob;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string where = "atoms[" + std::to_string(i) + "]";
        const json& a = atoms[i];
        if (!a.is_object()) schema_error(where + " must be an object");
        prob.push_back(number(field(a, "probability"), where + ".probability"));
        if (a.contains("label")) {
            if (!a.at("label").is_string()) schema_error(where + ".label must be a string");
            labels.push_back(a.at("label").get<std::string>());
        } else {
            labels.push_back("w" + std::to_string(i));
        }
    }
    const std::size_t n = prob.size();

    std::vector<double> grid = number_array(field(doc, "grid"), "grid");
    std::vector<Partition> f = partitions(field(doc, "filtration_f"), "filtration_f", n);
    if (doc.contains("filtration_h") && doc.contains("delay")) {
        schema_error("give either 'filtration_h' or 'delay', not both");
    }
    std::vector<Partition> h = doc.contains("filtration_h")
                                   ? partitions(doc.at("filtration_h"), "filtration_h", n)
                                   : f;
    std::optional<std::vector<Partition>> fm;
    if (doc.contains("filtration_fm")) fm = partitions(doc.at("filtration_fm"), "filtration_fm", n);

    FiniteFilteredSpace space(prob, grid, f, h, fm, labels);
    if (doc.contains("delay")) {
        space = delayed_filtration(space, DelaySpec{number(doc.at("delay"), "delay")});
    }
    require_valid(space);

    const json& rows_json = field(doc, "martingale");
    if (!rows_json.is_array() || rows_json.size() != space.index_count()) {
        schema_error("'martingale' must have one row per grid index (" +
                     std::to_string(space.index_count()) + ")");
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < rows_json.size(); ++k) {
        rows.push_back(number_array(rows_json[k], "martingale[" + std::to_string(k) + "]"));
        if (rows.back().size() != n) {
            schema_error("martingale[" + std::to_string(k) + "] must have one value per atom");
        }
    }
    MartingaleProcess m =
        make_martingale(space, GridProcess::from_rows(rows, Measurability::Adapted, Info::F));

    SpaceDocument out{std::move(space), std::move(m), std::nullopt, std::nullopt};
    if (doc.contains("claim")) {
        const json& c = doc.at("claim");
        if (c.is_string()) {
            out.claim_expression = c.get<std::string>();
        } else {
            out.claim = number_array(c, "claim");
            if (out.claim->size() != n) schema_error("'claim' must have one value per atom");
        }
    }
    return out;
}

SpaceDocument load_space(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open space file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_space(text.str());
}

std::string space_to_json(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                          const std::optional<std::vector<double>>& claim) {
    json doc;
    json atoms = json::array();
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        atoms.push_back({{"label", space.labels()[i]}, {"probability", space.probabilities()[i]}});
    }
    doc["atoms"] = std::move(atoms);
    doc["grid"] = std::vector<double>(space.grid().begin(), space.grid().end());
    doc["filtration_f"] = labels_of(space.filtration(Info::F));
    doc["filtration_h"] = labels_of(space.filtration(Info::H));
    if (space.has_price_filtration()) doc["filtration_fm"] = labels_of(space.filtration(Info::FM));
    doc["martingale"] = m.process.rows();
    if (claim) doc["claim"] = *claim;
    return doc.dump(2) + "\n";
}

}  // namespace gkwpi
