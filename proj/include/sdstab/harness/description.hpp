#pragma once

// System-description files: JSON schema, strict parsing with field-path
// diagnostics, normalized serialization, and assembly of the RieszSystem.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdstab/numeric.hpp"
#include "sdstab/stability.hpp"
#include "sdstab/synthesis.hpp"
#include "sdstab/system.hpp"
#include "sdstab/transfer.hpp"

namespace sdstab::harness {

using json = nlohmann::ordered_json;

/// Malformed description: `path` names the offending field (e.g. "scan.n_theta"),
/// `line`/`column` are set for syntax errors.
class DescriptionError : public std::runtime_error {
public:
    DescriptionError(std::string path, const std::string& message, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(format(path, message, line, column)), path_(std::move(path)), line_(line), column_(column) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& path, const std::string& message, std::size_t line,
                              std::size_t column) {
        std::ostringstream os;
        if (line > 0) os << "line " << line << ", column " << column << ": ";
        if (!path.empty()) os << path << ": ";
        os << message;
        return os.str();
    }

    std::string path_;
    std::size_t line_;
    std::size_t column_;
};

struct DecayConfig {
    long long k_max = 100000;
    double threshold = 1e-3;
    std::size_t n_random = 20;

    bool operator==(const DecayConfig&) const = default;
};

struct TrajectoryConfig {
    std::size_t samples_per_period = 8;
    std::size_t periods = 20;

    bool operator==(const TrajectoryConfig&) const = default;
};

struct SystemDescription {
    std::vector<cplx> head_eigenvalues;
    std::optional<ReciprocalTail> tail;
    std::size_t truncation = 0;
    std::vector<SparseEntry> b;  ///< 0-based positions; 1-based in the file
    bool f1_auto = false;
    std::vector<cplx> targets;   ///< used when f1_auto
    std::vector<SparseEntry> f1; ///< used when !f1_auto
    std::vector<SparseEntry> f2;
    std::optional<double> kappa;
    double alpha = 0.0;
    double delta = 0.0;
    double riesz_Ma = 1.0;
    double riesz_Mb = 1.0;
    ScanGrid scan;
    PowerBoundProbe probe;
    std::vector<double> tau_grid;
    std::uint64_t seed = 0;
    double target_ratio = 0.5;
    double a6_margin = 1e-6;
    int m1_grid = 256;
    DecayConfig decay;
    TrajectoryConfig trajectory;

    bool operator==(const SystemDescription&) const = default;
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!ok.count(it.key())) throw DescriptionError(join(path, it.key()), "unknown key");
}

inline const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw DescriptionError(path, "expected an object");
    return j;
}

inline const json& member(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw DescriptionError(join(path, key), "missing required key");
    return *it;
}

inline double get_real(const json& j, const std::string& path) {
    if (!j.is_number()) throw DescriptionError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw DescriptionError(path, "expected a finite number");
    return v;
}

inline std::uint64_t get_uint(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw DescriptionError(path, "expected an integer");
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    const auto v = j.get<std::int64_t>();
    if (v < 0) throw DescriptionError(path, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

inline cplx get_complex(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw DescriptionError(path, "expected [re, im]");
    return {get_real(j[0], at(path, 0)), get_real(j[1], at(path, 1))};
}

inline std::vector<cplx> get_complex_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw DescriptionError(path, "expected a list of [re, im] pairs");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_complex(j[i], at(path, i)));
    return out;
}

inline std::vector<SparseEntry> get_sparse(const json& j, const std::string& path, std::size_t truncation) {
    if (!j.is_array()) throw DescriptionError(path, "expected a list of [index, [re, im]] entries");
    std::vector<SparseEntry> out;
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = at(path, i);
        if (!j[i].is_array() || j[i].size() != 2) throw DescriptionError(p, "expected [index, [re, im]]");
        const auto idx = get_uint(j[i][0], at(p, 0));
        if (idx < 1 || idx > truncation)
            throw DescriptionError(at(p, 0), "index must lie in 1.." + std::to_string(truncation));
        if (!seen.insert(idx).second) throw DescriptionError(at(p, 0), "duplicate index");
        out.push_back({static_cast<std::size_t>(idx - 1), get_complex(j[i][1], at(p, 1))});
    }
    return out;
}

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json complex_list_json(const std::vector<cplx>& v) {
    json a = json::array();
    for (const auto& z : v) a.push_back(complex_json(z));
    return a;
}

inline json sparse_json(const std::vector<SparseEntry>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back(json::array({e.position + 1, complex_json(e.value)}));
    return a;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace detail

inline SystemDescription description_from_json(const json& root) {
    using namespace detail;
    require_object(root, "");
    reject_unknown(root, "", {"head_eigenvalues", "tail", "truncation", "b", "f1", "targets", "f2", "kappa", "alpha",
                              "delta", "riesz_Ma", "riesz_Mb", "scan", "probe", "tau_grid", "seed", "target_ratio",
                              "a6_margin", "m1_grid", "decay", "trajectory"});
    SystemDescription d;
    d.head_eigenvalues = get_complex_list(member(root, "", "head_eigenvalues"), "head_eigenvalues");

    if (auto it = root.find("tail"); it != root.end() && !it->is_null()) {
        const auto& t = require_object(*it, "tail");
        reject_unknown(t, "tail", {"type", "coefficient", "start_index"});
        const auto& type = member(t, "tail", "type");
        if (!type.is_string() || type.get<std::string>() != "reciprocal")
            throw DescriptionError("tail.type", "only \"reciprocal\" is supported");
        ReciprocalTail tail;
        tail.coefficient = get_real(member(t, "tail", "coefficient"), "tail.coefficient");
        tail.start_index = static_cast<std::size_t>(get_uint(member(t, "tail", "start_index"), "tail.start_index"));
        if (!(tail.coefficient > 0.0)) throw DescriptionError("tail.coefficient", "must be positive");
        if (tail.start_index < 1) throw DescriptionError("tail.start_index", "must be >= 1");
        d.tail = tail;
    }

    d.truncation = static_cast<std::size_t>(get_uint(member(root, "", "truncation"), "truncation"));
    if (d.truncation < d.head_eigenvalues.size())
        throw DescriptionError("truncation", "must be at least the number of head eigenvalues");
    if (!d.tail && d.truncation != d.head_eigenvalues.size())
        throw DescriptionError("truncation", "must equal the number of head eigenvalues when no tail is given");

    d.b = get_sparse(member(root, "", "b"), "b", d.truncation);

    const auto& f1 = member(root, "", "f1");
    if (f1.is_string()) {
        if (f1.get<std::string>() != "auto") throw DescriptionError("f1", "expected \"auto\" or a sparse list");
        d.f1_auto = true;
        d.targets = get_complex_list(member(root, "", "targets"), "targets");
    } else {
        d.f1 = get_sparse(f1, "f1", d.truncation);
        if (root.contains("targets")) throw DescriptionError("targets", "only allowed with f1 = \"auto\"");
    }
    if (auto it = root.find("f2"); it != root.end()) d.f2 = get_sparse(*it, "f2", d.truncation);
    if (auto it = root.find("kappa"); it != root.end() && !it->is_null()) {
        d.kappa = get_real(*it, "kappa");
        if (!(*d.kappa > 0.0)) throw DescriptionError("kappa", "must be positive");
    }

    d.alpha = get_real(member(root, "", "alpha"), "alpha");
    d.delta = get_real(member(root, "", "delta"), "delta");
    if (auto it = root.find("riesz_Ma"); it != root.end()) d.riesz_Ma = get_real(*it, "riesz_Ma");
    if (auto it = root.find("riesz_Mb"); it != root.end()) d.riesz_Mb = get_real(*it, "riesz_Mb");

    if (auto it = root.find("scan"); it != root.end()) {
        const auto& s = require_object(*it, "scan");
        reject_unknown(s, "scan", {"omega_max", "n_omega", "eta", "n_theta", "exclusion_arc"});
        if (auto k = s.find("omega_max"); k != s.end()) d.scan.omega_max = get_real(*k, "scan.omega_max");
        if (auto k = s.find("n_omega"); k != s.end()) d.scan.n_omega = get_uint(*k, "scan.n_omega");
        if (auto k = s.find("eta"); k != s.end()) d.scan.eta = get_real(*k, "scan.eta");
        if (auto k = s.find("n_theta"); k != s.end()) d.scan.n_theta = get_uint(*k, "scan.n_theta");
        if (auto k = s.find("exclusion_arc"); k != s.end()) d.scan.exclusion_arc = get_real(*k, "scan.exclusion_arc");
        try {
            d.scan.validate();
        } catch (const std::invalid_argument& e) {
            throw DescriptionError("scan", e.what());
        }
    }

    if (auto it = root.find("probe"); it != root.end()) {
        const auto& p = require_object(*it, "probe");
        reject_unknown(p, "probe", {"r_values", "n_theta", "points_per_width"});
        if (auto k = p.find("r_values"); k != p.end()) {
            if (!k->is_array()) throw DescriptionError("probe.r_values", "expected a list");
            d.probe.r_values.clear();
            for (std::size_t i = 0; i < k->size(); ++i) d.probe.r_values.push_back(get_real((*k)[i], at("probe.r_values", i)));
        }
        if (auto k = p.find("n_theta"); k != p.end()) d.probe.n_theta = get_uint(*k, "probe.n_theta");
        if (auto k = p.find("points_per_width"); k != p.end())
            d.probe.points_per_width = get_real(*k, "probe.points_per_width");
        try {
            d.probe.validate();
        } catch (const std::invalid_argument& e) {
            throw DescriptionError("probe", e.what());
        }
    }

    const auto& tg = member(root, "", "tau_grid");
    if (!tg.is_array() || tg.empty()) throw DescriptionError("tau_grid", "expected a non-empty list");
    for (std::size_t i = 0; i < tg.size(); ++i) {
        const double t = get_real(tg[i], at("tau_grid", i));
        if (!(t > 0.0) || !(t < 1.0)) throw DescriptionError(at("tau_grid", i), "must lie in (0, 1)");
        if (i > 0 && !(t > d.tau_grid.back())) throw DescriptionError(at("tau_grid", i), "must be strictly ascending");
        d.tau_grid.push_back(t);
    }
    d.seed = get_uint(member(root, "", "seed"), "seed");

    if (auto it = root.find("target_ratio"); it != root.end()) {
        d.target_ratio = get_real(*it, "target_ratio");
        if (!(d.target_ratio > 0.0) || !(d.target_ratio < 1.0)) throw DescriptionError("target_ratio", "must lie in (0, 1)");
    }
    if (auto it = root.find("a6_margin"); it != root.end()) {
        d.a6_margin = get_real(*it, "a6_margin");
        if (!(d.a6_margin > 0.0)) throw DescriptionError("a6_margin", "must be positive");
    }
    if (auto it = root.find("m1_grid"); it != root.end()) {
        const auto g = get_uint(*it, "m1_grid");
        if (g < 64 || g > 1u << 20) throw DescriptionError("m1_grid", "must lie in 64..1048576");
        d.m1_grid = static_cast<int>(g);
    }
    if (auto it = root.find("decay"); it != root.end()) {
        const auto& o = require_object(*it, "decay");
        reject_unknown(o, "decay", {"k_max", "threshold", "n_random"});
        if (auto k = o.find("k_max"); k != o.end()) d.decay.k_max = static_cast<long long>(get_uint(*k, "decay.k_max"));
        if (auto k = o.find("threshold"); k != o.end()) d.decay.threshold = get_real(*k, "decay.threshold");
        if (auto k = o.find("n_random"); k != o.end()) d.decay.n_random = get_uint(*k, "decay.n_random");
        if (d.decay.k_max < 1) throw DescriptionError("decay.k_max", "must be >= 1");
        if (!(d.decay.threshold > 0.0) || !(d.decay.threshold < 1.0))
            throw DescriptionError("decay.threshold", "must lie in (0, 1)");
    }
    if (auto it = root.find("trajectory"); it != root.end()) {
        const auto& o = require_object(*it, "trajectory");
        reject_unknown(o, "trajectory", {"samples_per_period", "periods"});
        if (auto k = o.find("samples_per_period"); k != o.end())
            d.trajectory.samples_per_period = get_uint(*k, "trajectory.samples_per_period");
        if (auto k = o.find("periods"); k != o.end()) d.trajectory.periods = get_uint(*k, "trajectory.periods");
        if (d.trajectory.samples_per_period < 1)
            throw DescriptionError("trajectory.samples_per_period", "must be >= 1");
    }
    return d;
}

/// Normalized form: every field is written, optional ones only when present.
inline json description_to_json(const SystemDescription& d) {
    using namespace detail;
    json j;
    j["head_eigenvalues"] = complex_list_json(d.head_eigenvalues);
    if (d.tail)
        j["tail"] = {{"type", "reciprocal"}, {"coefficient", d.tail->coefficient}, {"start_index", d.tail->start_index}};
    j["truncation"] = d.truncation;
    j["b"] = sparse_json(d.b);
    if (d.f1_auto) {
        j["f1"] = "auto";
        j["targets"] = complex_list_json(d.targets);
    } else {
        j["f1"] = sparse_json(d.f1);
    }
    j["f2"] = sparse_json(d.f2);
    if (d.kappa) j["kappa"] = *d.kappa;
    j["alpha"] = d.alpha;
    j["delta"] = d.delta;
    j["riesz_Ma"] = d.riesz_Ma;
    j["riesz_Mb"] = d.riesz_Mb;
    j["scan"] = {{"omega_max", d.scan.omega_max},
                 {"n_omega", d.scan.n_omega},
                 {"eta", d.scan.eta},
                 {"n_theta", d.scan.n_theta},
                 {"exclusion_arc", d.scan.exclusion_arc}};
    j["probe"] = {{"r_values", d.probe.r_values},
                  {"n_theta", d.probe.n_theta},
                  {"points_per_width", d.probe.points_per_width}};
    j["tau_grid"] = d.tau_grid;
    j["seed"] = d.seed;
    j["target_ratio"] = d.target_ratio;
    j["a6_margin"] = d.a6_margin;
    j["m1_grid"] = d.m1_grid;
    j["decay"] = {{"k_max", d.decay.k_max}, {"threshold", d.decay.threshold}, {"n_random", d.decay.n_random}};
    j["trajectory"] = {{"samples_per_period", d.trajectory.samples_per_period}, {"periods", d.trajectory.periods}};
    return j;
}

inline std::string serialize_description(const SystemDescription& d) { return description_to_json(d).dump(2) + "\n"; }

inline SystemDescription parse_description(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        std::string msg = e.what();
        if (auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw DescriptionError("", msg, line, col);
    }
    return description_from_json(root);
}

inline SystemDescription load_description(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DescriptionError("", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_description(ss.str());
}

/// Closed-loop system assembled from a description. Explicit f1 is used as
/// given; f1 = "auto" runs pole placement and the (A6) nudge.
struct BuiltSystem {
    RieszSystem system;
    std::optional<FeedbackDesign> design;
    std::vector<cplx> f2;
};

inline BuiltSystem build_system(const SystemDescription& d) {
    SpectrumSpec spectrum(d.head_eigenvalues, d.tail, d.truncation);
    auto b = densify(d.b, d.truncation, "build_system");
    auto f2 = densify(d.f2, d.truncation, "build_system");
    RieszSystem open_loop(std::move(spectrum), std::move(b), std::vector<cplx>(d.truncation), d.riesz_Ma, d.riesz_Mb,
                          d.alpha, d.delta);
    if (d.f1_auto) {
        auto design = design_feedback(open_loop, d.targets, f2, d.kappa, d.a6_margin);
        auto sys = design.system;
        auto f2_final = design.f2;
        return BuiltSystem{std::move(sys), std::move(design), std::move(f2_final)};
    }
    auto f = densify(d.f1, d.truncation, "build_system");
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += f2[i];
    return BuiltSystem{open_loop.with_feedback(std::move(f)), std::nullopt, std::move(f2)};
}

/// Reference description: unstable head {1}, tail -1/n from n = 2,
/// b_1 = 1 and seeded tail entries b_n = u_n / n^2 (|u_n| <= 1) on n <= support,
/// f1 placing the head at -1, and a small seeded f2 on the stable modes 2..11.
inline SystemDescription example44_description(std::uint64_t seed, std::size_t truncation = 200,
                                              std::size_t support = 50) {
    if (support < 2 || support > truncation) throw std::invalid_argument("example44_description: bad support");
    numeric::Rng rng(seed);
    SystemDescription d;
    d.head_eigenvalues = {cplx{1.0, 0.0}};
    d.tail = ReciprocalTail{1.0, 2};
    d.truncation = truncation;
    d.b.push_back({0, cplx{1.0, 0.0}});
    for (std::size_t n = 2; n <= support; ++n) {
        const double nn = static_cast<double>(n);
        d.b.push_back({n - 1, cplx{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)} / (nn * nn)});
    }
    d.f1_auto = true;
    d.targets = {cplx{-1.0, 0.0}};
    for (std::size_t n = 2; n <= 11; ++n)
        d.f2.push_back({n - 1, cplx{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)} * 0.01});
    d.kappa = 0.1;
    d.alpha = 0.5;
    d.delta = pi / 4;
    d.tau_grid = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
    d.seed = seed;
    return d;
}

} // namespace sdstab::harness
