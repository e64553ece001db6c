#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hss/bounds.hpp"
#include "hss/complexity.hpp"
#include "hss/core.hpp"
#include "hss/errors.hpp"
#include "hss/mechanisms.hpp"
#include "hss/stability.hpp"

namespace hss {

using json = nlohmann::json;

inline json to_json(const EstimateReport& r) {
    return json{{"value", r.value},         {"std_error", r.std_error},
                {"n_draws", r.n_draws},     {"exact", r.exact},
                {"lower_bound_of_sup", r.lower_bound_of_sup}, {"scheme", r.scheme}};
}

inline json to_json(const StabilityReport& r) {
    return json{{"beta_hat", r.beta_hat},
                {"chi_hat", r.chi_hat},
                {"chi_bar_hat", r.chi_bar_hat},
                {"delta_bar_hat", r.delta_bar_hat},
                {"delta_hat", r.delta_hat},
                {"delta_max_hat", r.delta_max_hat},
                {"n_perturbations", r.n_perturbations},
                {"n_probe_points", r.n_probe_points},
                {"directionality",
                 r.directionality == StabilityReport::Directionality::exact ? "exact" : "lower_bound"}};
}

inline json to_json(const BoundInputs& in) {
    json j{{"m", in.m},     {"n", in.n},         {"delta", in.delta},
           {"beta", in.beta}, {"chi", in.chi},   {"delta_max", in.delta_max},
           {"trans_rad", in.trans_rad}, {"gamma_fv", in.gamma_fv}};
    if (!std::isinf(in.chi_bar)) j["chi_bar"] = in.chi_bar;
    if (!std::isinf(in.rad)) j["rad"] = in.rad;
    return j;
}

inline json to_json(const BoundReport& r) {
    json branches = json::object();
    for (const auto& [name, v] : r.branch_values)
        branches[name] = json{{"value", v}, {"vacuous", r.vacuous.at(name)}};
    return json{{"branches", branches}, {"min_value", r.min_value}, {"inputs", to_json(r.inputs)}};
}

inline json to_json(const MechanismOutput& r) {
    return json{{"chosen_index", r.chosen_index}, {"probs", r.probs}, {"epsilon", r.epsilon}};
}

inline json to_json(const CoverageResult& r) {
    return json{{"violation_rate", r.violation_rate},
                {"mean_slack", r.mean_slack},
                {"bound", r.bound},
                {"n_trials", r.n_trials}};
}

// One CSV row per scalar quantity; fixed column set and row order.
struct CsvRow {
    std::string quantity;
    double value = 0.0;
    double std_error = 0.0;
    bool exact = false;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string to_csv(const std::vector<CsvRow>& rows) {
    std::string out = "quantity,value,std_error,exact\n";
    for (const auto& r : rows) {
        out += r.quantity;
        out += ',';
        out += format_double(r.value);
        out += ',';
        out += format_double(r.std_error);
        out += ',';
        out += r.exact ? "true" : "false";
        out += '\n';
    }
    return out;
}

inline std::vector<CsvRow> csv_rows(const std::string& prefix, const EstimateReport& r) {
    return {{prefix, r.value, r.std_error, r.exact}};
}

inline std::vector<CsvRow> csv_rows(const StabilityReport& r) {
    const bool exact = r.directionality == StabilityReport::Directionality::exact;
    return {{"beta_hat", r.beta_hat, 0.0, exact},
            {"chi_hat", r.chi_hat, r.chi_std_error, exact},
            {"chi_bar_hat", r.chi_bar_hat, r.chi_std_error, exact},
            {"delta_bar_hat", r.delta_bar_hat, r.delta_std_error, exact},
            {"delta_hat", r.delta_hat, 0.0, exact},
            {"delta_max_hat", r.delta_max_hat, 0.0, exact}};
}

inline std::vector<CsvRow> csv_rows(const BoundReport& r) {
    std::vector<CsvRow> rows;
    for (const auto& [name, v] : r.branch_values) rows.push_back({"branch_" + name, v, 0.0, true});
    rows.push_back({"min_value", r.min_value, 0.0, true});
    return rows;
}

// Sample I/O: CSV with header x0,...,xd,y.
inline void write_sample_csv(const LabeledSample& s, std::ostream& os) {
    const std::size_t d = s.dim();
    for (std::size_t j = 0; j < d; ++j) os << 'x' << j << ',';
    os << "y\n";
    for (const auto& z : s.points) {
        for (std::size_t j = 0; j < d; ++j) os << format_double(z.x[j]) << ',';
        os << format_double(z.y) << '\n';
    }
}

inline LabeledSample read_sample_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw validation_error("sample csv: missing header");
    std::size_t dim = 0;
    {
        std::size_t pos = 0;
        while ((pos = line.find(',', pos)) != std::string::npos) {
            ++dim;
            ++pos;
        }
    }
    std::vector<LabeledPoint> pts;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        LabeledPoint z;
        std::size_t start = 0;
        std::vector<double> fields;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string tok = line.substr(start, comma == std::string::npos ? comma : comma - start);
            try {
                fields.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw validation_error("sample csv: non-numeric field '" + tok + "'");
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != dim + 1) throw validation_error("sample csv: wrong field count");
        z.x.assign(fields.begin(), fields.end() - 1);
        z.y = fields.back();
        pts.push_back(std::move(z));
    }
    return LabeledSample(std::move(pts));
}

}  // namespace hss
