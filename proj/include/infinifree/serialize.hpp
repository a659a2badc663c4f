#pragma once

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "infinifree/cumulants.hpp"
#include "infinifree/law.hpp"
#include "infinifree/ovlaw.hpp"

namespace infinifree {

using json = nlohmann::json;

/// Raised on malformed configuration input; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out.push_back({m(i, j).real(), m(i, j).imag()});
    return out;
}

inline Matrix matrix_from_json(const json& j, int d) {
    if (!j.is_array() || j.size() != static_cast<size_t>(d) * d)
        throw ConfigError("matrix: expected a row-major list of d*d [re, im] pairs");
    Matrix m(d, d);
    size_t k = 0;
    for (int i = 0; i < d; ++i)
        for (int c = 0; c < d; ++c, ++k) m(i, c) = cx(j[k][0].get<double>(), j[k][1].get<double>());
    return m;
}

inline json law_to_json(const InfLaw& law) {
    json j;
    switch (law.kind()) {
        case LawKind::Semicircle:
            j["kind"] = "semicircle";
            j["mean"] = law.mean();
            j["variance"] = law.variance();
            break;
        case LawKind::Atomic: {
            j["kind"] = "atomic";
            json atoms = json::array();
            for (const auto& a : law.atoms()) atoms.push_back({a.x, a.w, a.wp});
            j["atoms"] = atoms;
            break;
        }
        case LawKind::MomentTable:
            j["kind"] = "moment_table";
            break;
    }
    j["std_moments"] = law.std_moments();
    j["inf_moments"] = law.inf_moments();
    j["support_bound"] = law.support_bound();
    j["max_order"] = law.max_order();
    return j;
}

inline InfLaw law_from_json(const json& j) {
    if (!j.contains("kind")) throw ConfigError("law: missing \"kind\"");
    const std::string kind = j.at("kind").get<std::string>();
    const int max_order = j.value("max_order", 16);
    try {
        if (kind == "semicircle")
            return InfLaw::semicircle(j.value("mean", 0.0), j.at("variance").get<double>(),
                                      max_order);
        if (kind == "atomic") {
            std::vector<Atom> atoms;
            for (const auto& a : j.at("atoms"))
                atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>(),
                                 a.size() > 2 ? a.at(2).get<double>() : 0.0});
            return InfLaw::atomic(std::move(atoms), max_order);
        }
        if (kind == "moment_table")
            return InfLaw::moment_table(j.at("std_moments").get<std::vector<double>>(),
                                        j.value("inf_moments", std::vector<double>{}),
                                        j.value("support_bound", 0.0));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("law: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("law: ") + e.what());
    }
    throw ConfigError("law: unknown kind \"" + kind + "\"");
}

/// A named scalar joint law: infinitesimally free variables with per-variable
/// marginals, assembled through the vanishing-mixed-cumulants construction.
struct JointLawConfig {
    std::vector<std::string> names;
    std::vector<int> groups;
    std::vector<InfLaw> laws;
    int order = 8;

    MomentOracle oracle() const {
        std::vector<CumulantFamily> fams;
        for (size_t i = 0; i < laws.size(); ++i)
            fams.push_back(
                cumulants_from_moments(laws[i].oracle(static_cast<int>(i)),
                                       {static_cast<int>(i)}, order));
        return joint_from_free_cumulants(std::move(fams));
    }
    std::map<int, int> labeling() const {
        std::map<int, int> m;
        for (size_t i = 0; i < groups.size(); ++i) m[static_cast<int>(i)] = groups[i];
        return m;
    }
};

inline JointLawConfig joint_from_json(const json& j) {
    if (j.value("kind", "") != "free_joint")
        throw ConfigError("joint law: expected kind \"free_joint\"");
    JointLawConfig cfg;
    cfg.order = j.value("order", 8);
    if (cfg.order < 1 || cfg.order > kMaxConversionOrder)
        throw ConfigError("joint law: order outside [1, 10]");
    for (const auto& v : j.at("variables")) {
        cfg.names.push_back(v.value("name", "x" + std::to_string(cfg.names.size())));
        cfg.groups.push_back(v.value("group", static_cast<int>(cfg.groups.size()) + 1));
        cfg.laws.push_back(law_from_json(v.at("law")));
    }
    if (cfg.laws.empty()) throw ConfigError("joint law: no variables");
    return cfg;
}

/// Serialized cumulant table of one family: identity-coefficient values per
/// (order, word), matrices row-major.
inline json cumulant_entries_to_json(const CumulantFamily& fam, int max_order) {
    json out = json::array();
    const int d = fam.dim();
    std::vector<int> word;
    std::function<void(int)> rec = [&](int len) {
        if (static_cast<int>(word.size()) == len) {
            std::vector<Matrix> ic(static_cast<size_t>(len) + 1, Matrix::Identity(d, d));
            json entry;
            entry["order"] = len;
            entry["labels"] = word;
            entry["std"] = matrix_to_json(fam.kappa(word, ic));
            entry["inf"] = matrix_to_json(fam.dkappa(word, ic));
            out.push_back(entry);
            return;
        }
        for (int l : fam.labels()) {
            word.push_back(l);
            rec(len);
            word.pop_back();
        }
    };
    for (int n = 1; n <= max_order; ++n) rec(n);
    return out;
}

/// Operator-valued law configs. Kinds: "scalar" (d = 1 view of a scalar
/// law), "diagonal_lift" (x (x) I_d), "scalar_lift" (entrywise lift of a
/// free joint), "cumulant_family" (d = 1, explicit single-variable tables).
inline OVLaw ov_law_from_json(const json& j) {
    const std::string kind = j.value("kind", "");
    const int K = j.value("K", 24);
    try {
        if (kind == "scalar") return OVLaw::from_scalar(law_from_json(j.at("law")), K);
        if (kind == "diagonal_lift")
            return OVLaw::diagonal_lift(law_from_json(j.at("law")), j.at("d").get<int>(), K);
        if (kind == "scalar_lift") {
            JointLawConfig joint = joint_from_json(j.at("joint"));
            const int N = j.at("N").get<int>();
            std::vector<Eigen::MatrixXi> entries;
            for (const auto& em : j.at("entries")) {
                Eigen::MatrixXi e(N, N);
                for (int r = 0; r < N; ++r)
                    for (int c = 0; c < N; ++c) e(r, c) = em.at(r).at(c).get<int>();
                entries.push_back(e);
            }
            double bound = 0;
            for (const auto& l : joint.laws) bound = std::max(bound, l.support_bound());
            double M = j.value("M", double(N) * bound);
            return lift_scalar_matrix(joint.oracle(), entries, N, M / N, K);
        }
        if (kind == "cumulant_family") {
            if (j.value("d", 1) != 1)
                throw ConfigError("ov law: cumulant_family files support d = 1");
            // single-variable scalar cumulant tables kappa_n, dkappa_n
            std::vector<double> ks = j.at("kappa").get<std::vector<double>>();
            std::vector<double> dks = j.at("dkappa").get<std::vector<double>>();
            if (ks.size() != dks.size()) throw ConfigError("ov law: kappa table size mismatch");
            const double M = j.at("M").get<double>();
            InfLaw law = InfLaw::from_scalar_cumulants(ks, dks, M, K);
            return OVLaw::from_scalar(law, K);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("ov law: ") + e.what());
    }
    throw ConfigError("ov law: unknown kind \"" + kind + "\"");
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

} // namespace infinifree
