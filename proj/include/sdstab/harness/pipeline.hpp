#pragma once

// The stability pipeline: build -> assumptions -> tail certificate -> epsilon_c
// -> tau* -> evaluation at one tau (epsilon_d, unit circle, power bound, decay,
// trajectory). A failed stage blocks every later stage, which is then recorded
// as "skipped: <reason>".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdstab/assumptions.hpp"
#include "sdstab/errors.hpp"
#include "sdstab/harness/description.hpp"
#include "sdstab/numeric.hpp"
#include "sdstab/spectral_core.hpp"
#include "sdstab/stability.hpp"
#include "sdstab/synthesis.hpp"
#include "sdstab/system.hpp"
#include "sdstab/transfer.hpp"

namespace sdstab::harness {

inline constexpr const char* tool_name = "sdstab";
inline constexpr const char* tool_version = "1.0.0";

/// Power-bound verdict: max over radii of the integral, over its value at the largest radius.
inline constexpr double power_bound_growth_limit = 10.0;

enum class Mode { check, simulate, scan, place };

inline const char* to_string(Mode m) {
    switch (m) {
    case Mode::check: return "check";
    case Mode::simulate: return "simulate";
    case Mode::scan: return "scan";
    case Mode::place: return "place";
    }
    return "?";
}

struct PipelineOptions {
    Mode mode = Mode::check;
    std::optional<double> tau;            ///< evaluate at this tau instead of tau*/2
    std::optional<std::uint64_t> seed;    ///< overrides the description seed
};

struct SeriesPoint {
    double x;
    double y;
};

struct PowerBoundRow {
    double r;
    double integral_value;
    std::size_t vector_index;
    bool adjoint;
};

struct StabilityReport {
    json document;
    bool passed = false;
    std::optional<std::vector<TrajectoryPoint>> trajectory;
    std::optional<std::vector<SeriesPoint>> scan_c;  ///< (omega, |1 - G(i omega)|)
    std::optional<std::vector<SeriesPoint>> scan_d;  ///< (theta, |1 - F R(e^{i theta}, T) S|)
    std::optional<std::vector<PowerBoundRow>> powerbound;

    int exit_code() const { return passed ? 0 : 2; }
    std::string dump() const { return document.dump(2) + "\n"; }
};

namespace detail {

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline json cnum(cplx z) { return json::array({num(z.real()), num(z.imag())}); }

inline json cnum_list(const std::vector<cplx>& v) {
    json a = json::array();
    for (const auto& z : v) a.push_back(cnum(z));
    return a;
}

inline json nonzero_entries(const std::vector<cplx>& v) {
    json a = json::array();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] != cplx{0.0, 0.0}) a.push_back(json::array({i + 1, cnum(v[i])}));
    return a;
}

inline json skipped(const std::string& reason) { return json{{"status", "skipped: " + reason}}; }

inline CoeffVector normalized(std::vector<cplx> v) {
    const double n = std::sqrt(numeric::norm2_sq(v));
    if (n > 0.0)
        for (auto& c : v) c /= n;
    return CoeffVector(std::move(v));
}

inline std::vector<cplx> random_on(numeric::Rng& rng, std::size_t n, std::size_t lo, std::size_t hi) {
    std::vector<cplx> v(n, cplx{0.0, 0.0});
    for (std::size_t i = lo; i < hi; ++i) v[i] = rng.complex_uniform(-1.0, 1.0);
    return v;
}

inline std::vector<cplx> basis(std::size_t n, std::size_t i) {
    std::vector<cplx> v(n, cplx{0.0, 0.0});
    v[i] = 1.0;
    return v;
}

inline json lower_bound_json(const LowerBoundResult& r) {
    return json{{"epsilon", num(r.epsilon)},
                {"raw_min", num(r.raw_min)},
                {"truncation_slack", num(r.truncation_slack)},
                {"limit_margin", num(r.limit_margin)},
                {"argmin_point", cnum(r.argmin_point)},
                {"argmin_kind", to_string(r.argmin_kind)},
                {"evaluations", r.evaluations}};
}

inline json tau_table_json(const TauStarResult& r) {
    json rows = json::array();
    for (const auto& row : r.table)
        rows.push_back(json{{"tau", row.tau},
                            {"epsilon_d", row.epsilon_d ? num(*row.epsilon_d) : json(nullptr)},
                            {"nonpathological", row.nonpathological},
                            {"admissible", row.admissible},
                            {"reason", row.reason.empty() ? json(nullptr) : json(row.reason)}});
    return rows;
}

} // namespace detail

struct BatteryVector {
    std::string name;
    CoeffVector x;
};

/// Eight probe vectors: three seeded random, three basis-aligned (first head
/// mode, first tail mode, deepest tail mode) and two mixtures.
inline std::vector<BatteryVector> probe_battery(const RieszSystem& sys, std::uint64_t seed) {
    const std::size_t n = sys.truncation();
    const std::size_t h = sys.spectrum().head_size();
    numeric::Rng rng(seed);
    std::vector<std::vector<cplx>> r;
    for (int k = 0; k < 3; ++k) r.push_back(detail::random_on(rng, n, 0, n));
    const std::size_t first_tail = h < n ? h : n - 1;
    std::vector<BatteryVector> out;
    out.push_back({"random_0", detail::normalized(r[0])});
    out.push_back({"random_1", detail::normalized(r[1])});
    out.push_back({"random_2", detail::normalized(r[2])});
    out.push_back({"first_head_mode", detail::normalized(detail::basis(n, 0))});
    out.push_back({"first_tail_mode", detail::normalized(detail::basis(n, first_tail))});
    out.push_back({"deepest_tail_mode", detail::normalized(detail::basis(n, n - 1))});
    out.push_back({"mixed_head", detail::normalized((out[0].x + out[3].x).coeffs())});
    out.push_back({"mixed_tail", detail::normalized((out[1].x + out[5].x).coeffs())});
    return out;
}

inline StabilityReport run_pipeline(const SystemDescription& desc, const PipelineOptions& opt = {}) {
    using detail::num;
    using detail::skipped;
    StabilityReport rep;
    json& doc = rep.document;
    const std::uint64_t seed = opt.seed.value_or(desc.seed);
    const Tolerances tol{};
    const auto a4_grid = default_a4_grid();
    const bool want_assumptions = opt.mode == Mode::check;
    const bool want_scans = opt.mode == Mode::check || opt.mode == Mode::scan ||
                            (opt.mode == Mode::simulate && !opt.tau);
    const bool want_eval_scan = opt.mode == Mode::check || opt.mode == Mode::scan;
    const bool want_certs = opt.mode == Mode::check;
    const bool want_traj = opt.mode == Mode::check || opt.mode == Mode::simulate;

    doc["tool"] = {{"name", tool_name}, {"version", tool_version}};
    doc["mode"] = to_string(opt.mode);
    doc["seed"] = seed;
    doc["description"] = description_to_json(desc);
    {
        json probe_nodes = json::array();
        for (double r : desc.probe.r_values) probe_nodes.push_back(json{{"r", r}, {"nodes", desc.probe.nodes_for(r)}});
        doc["settings"] = {{"separation_tolerance", tol.separation},
                           {"smw_denominator_tolerance", tol.smw_denominator},
                           {"a4_grid", {{"points", a4_grid.size()}, {"omega_min", 1e-3}, {"omega_max", 1e3}}},
                           {"a6_margin", desc.a6_margin},
                           {"m1_grid", desc.m1_grid},
                           {"m1_safety_factor", m1_safety_factor},
                           {"target_ratio", desc.target_ratio},
                           {"sampling_tolerance", 1e-9},
                           {"scan", doc["description"]["scan"]},
                           {"probe", {{"r_values", desc.probe.r_values},
                                      {"n_theta", desc.probe.n_theta},
                                      {"points_per_width", desc.probe.points_per_width},
                                      {"nodes", probe_nodes},
                                      {"growth_limit", power_bound_growth_limit}}},
                           {"decay", doc["description"]["decay"]},
                           {"trajectory", doc["description"]["trajectory"]}};
    }

    std::optional<std::string> blocker;
    auto fail = [&](const char* stage) {
        if (!blocker) blocker = std::string(stage) + " failed";
    };

    // build
    std::optional<BuiltSystem> built;
    {
        json st;
        try {
            built = build_system(desc);
            const auto& sys = built->system;
            st["status"] = "passed";
            st["f"] = detail::nonzero_entries(sys.f());
            st["f_norm_bound"] = num(sys.f_norm_bound());
            if (built->design) {
                const auto& d = *built->design;
                st["placement"] = {{"targets", detail::cnum_list(desc.targets)},
                                   {"f1", detail::nonzero_entries(d.f1)},
                                   {"achieved", detail::cnum_list(d.placement.achieved_eigs)},
                                   {"max_error", num(d.placement.max_error)}};
                st["f2_norm"] = num(d.f2_norm);
                st["kappa"] = d.kappa ? json(*d.kappa) : json(nullptr);
                st["f2_within_kappa"] = d.f2_within_kappa();
                if (d.nudge)
                    st["a6_nudge"] = {{"position", d.nudge->position + 1},
                                      {"shift", detail::cnum(d.nudge->shift)},
                                      {"margin_before", num(std::abs(d.nudge->value_before + 1.0))},
                                      {"margin_after", num(std::abs(d.nudge->value_after + 1.0))}};
                else
                    st["a6_nudge"] = nullptr;
                if (!d.f2_within_kappa()) {
                    st["status"] = "failed";
                    st["reason"] = "||f2|| >= kappa";
                    fail("build");
                }
            } else {
                st["placement"] = nullptr;
            }
        } catch (const std::exception& e) {
            st["status"] = "failed";
            st["reason"] = e.what();
            fail("build");
        }
        doc["build"] = st;
    }
    if (opt.mode == Mode::place) {
        rep.passed = !blocker;
        doc["verdict"] = {{"passed", rep.passed}, {"reason", blocker ? json(*blocker) : json(nullptr)}};
        return rep;
    }

    // assumptions
    if (!want_assumptions) {
        doc["assumptions"] = skipped("not requested");
    } else if (blocker) {
        doc["assumptions"] = skipped(*blocker);
    } else {
        const auto& sys = built->system;
        json st;
        const auto a = check_A1_A2_A3(sys);
        const auto a5 = check_A5(sys);
        const auto a6 = check_A6(sys, desc.a6_margin);
        st["A1"] = {{"ok", a.a1_certified}, {"sector_count", a.a1_count}};
        st["A2"] = {{"ok", a.a2_ok},
                    {"min_abs_real", num(a.a2_min_abs_real)},
                    {"offender", a.a2_offender ? json(*a.a2_offender + 1) : json(nullptr)}};
        st["A3"] = {{"ok", a.a3_ok}, {"status", to_string(a.a3)}};
        bool a4_ok = false;
        try {
            const auto a4 = check_A4_example(sys, a4_grid);
            a4_ok = a4.ok;
            st["A4"] = {{"ok", a4.ok},
                        {"sup_resolvent_norm", num(a4.sup_estimate)},
                        {"sup_low_frequency_weighted", num(a4.low_frequency_weighted)},
                        {"closed_loop_coupled_eigs", detail::cnum_list(a4.closed_loop_coupled_eigs)}};
        } catch (const HeadNotStabilized& e) {
            st["A4"] = {{"ok", false}, {"reason", e.what()}};
        }
        const auto bdom = verify_b_in_domain(sys);
        st["A5"] = {{"ok", a5.ok},
                    {"sum_abs_b_over_lambda_sq", num(a5.value)},
                    {"weighted_tail_sum", num(bdom.weighted_tail_sum)},
                    {"weighted_last_half_share", num(bdom.last_half_share)},
                    {"weighted_sum_stabilizing", bdom.weighted_sum_stabilizing}};
        st["A6"] = {{"ok", a6.ok}, {"value", detail::cnum(a6.value)}, {"margin", num(std::abs(a6.value + 1.0))}};
        json notes = json::array();
        for (const auto& n : a.notes) notes.push_back(n);
        st["notes"] = notes;
        const bool ok = a.a1_certified && a.a2_ok && a.a3_ok && a4_ok && a5.ok && a6.ok;
        st["status"] = ok ? "passed" : "failed";
        doc["assumptions"] = st;
        if (!ok) fail("assumptions");
    }

    // tail certificate
    std::optional<TailCertificate> cert;
    if (!want_scans && !want_certs) {
        doc["tail_certificate"] = skipped("not requested");
    } else if (blocker) {
        doc["tail_certificate"] = skipped(*blocker);
    } else {
        const auto& sys = built->system;
        json st;
        try {
            cert = make_tail_certificate(sys, desc.m1_grid);
            const bool ok = sys.truncation() >= cert->tail_start;
            st = {{"status", ok ? "passed" : "failed"},
                  {"gamma1", num(cert->gamma1)},
                  {"gamma2", num(cert->gamma2)},
                  {"m1", num(cert->m1)},
                  {"m1_grid_max", num(cert->m1_grid_max)},
                  {"upsilon1", num(cert->upsilon1)},
                  {"upsilon2", num(cert->upsilon2)},
                  {"tail_start", cert->tail_start + 1},
                  {"continuous_bound", num(cert->cont_tail_bound)},
                  {"discrete_bound", num(cert->disc_tail_bound)}};
            if (!ok) {
                st["reason"] = "truncation ends inside the sector";
                fail("tail_certificate");
            }
        } catch (const std::exception& e) {
            st = {{"status", "failed"}, {"reason", e.what()}};
            fail("tail_certificate");
        }
        doc["tail_certificate"] = st;
    }

    // epsilon_c
    std::optional<double> eps_c;
    if (!want_scans) {
        doc["epsilon_c"] = skipped("not requested");
    } else if (blocker) {
        doc["epsilon_c"] = skipped(*blocker);
    } else {
        const auto& sys = built->system;
        auto record_scan = [&](const LowerBoundResult& r) {
            std::vector<SeriesPoint> pts;
            for (const auto& s : r.samples)
                if (s.kind == SampleKind::imaginary_axis) pts.push_back({s.param, s.value});
            std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
            rep.scan_c = std::move(pts);
        };
        try {
            const auto r = scan_epsilon_c(sys, desc.scan, *cert, true, tol);
            record_scan(r);
            eps_c = r.epsilon;
            auto st = detail::lower_bound_json(r);
            st["status"] = "passed";
            doc["epsilon_c"] = st;
        } catch (const NegativeMargin& e) {
            record_scan(e.result());
            auto st = detail::lower_bound_json(e.result());
            st["status"] = "failed";
            st["reason"] = e.what();
            doc["epsilon_c"] = st;
            fail("epsilon_c");
        } catch (const std::exception& e) {
            doc["epsilon_c"] = {{"status", "failed"}, {"reason", e.what()}};
            fail("epsilon_c");
        }
    }

    // tau*
    std::optional<double> tau_star;
    if (!want_scans) {
        doc["tau_star"] = skipped("not requested");
    } else if (blocker) {
        doc["tau_star"] = skipped(*blocker);
    } else {
        try {
            const auto r = find_tau_star(built->system, *eps_c, desc.target_ratio, desc.tau_grid, desc.scan, *cert, tol);
            tau_star = r.tau_star;
            doc["tau_star"] = {{"status", "passed"},
                               {"tau_star", r.tau_star},
                               {"threshold", num(r.target_ratio * r.epsilon_c)},
                               {"table", detail::tau_table_json(r)}};
        } catch (const NoAdmissibleTau& e) {
            doc["tau_star"] = {{"status", "failed"},
                               {"tau_star", nullptr},
                               {"reason", e.what()},
                               {"threshold", num(e.result().target_ratio * e.result().epsilon_c)},
                               {"table", detail::tau_table_json(e.result())}};
            fail("tau_star");
        }
    }

    // evaluation tau
    std::optional<double> tau_eval;
    {
        json st;
        if (opt.tau) {
            if (!(*opt.tau > 0.0) || !(*opt.tau < 1.0)) {
                st = {{"status", "failed"}, {"reason", "override tau must lie in (0, 1)"}};
                fail("tau");
            } else {
                tau_eval = *opt.tau;
                st = {{"status", "passed"}, {"tau", *opt.tau}, {"source", "override"}};
            }
        } else if (blocker) {
            st = skipped(*blocker);
        } else if (tau_star) {
            tau_eval = *tau_star / 2;
            st = {{"status", "passed"}, {"tau", *tau_eval}, {"source", "tau_star/2"}};
        } else {
            st = skipped("no tau available");
        }
        doc["tau"] = st;
    }

    std::optional<DeltaOperator> op;
    if (built && tau_eval) op.emplace(built->system, *tau_eval);

    // epsilon_d at the evaluation tau
    if (!want_eval_scan) {
        doc["epsilon_d"] = skipped("not requested");
    } else if (blocker || !op) {
        doc["epsilon_d"] = skipped(blocker.value_or("no tau available"));
    } else {
        auto record_scan = [&](const LowerBoundResult& r) {
            std::vector<SeriesPoint> pts;
            for (const auto& s : r.samples)
                if (s.kind == SampleKind::unit_circle) pts.push_back({s.param, s.value});
            std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
            rep.scan_d = std::move(pts);
        };
        try {
            const auto r = scan_epsilon_d(built->system, *tau_eval, desc.scan, *cert, true, tol);
            record_scan(r);
            auto st = detail::lower_bound_json(r);
            st["tau"] = *tau_eval;
            st["status"] = "passed";
            doc["epsilon_d"] = st;
        } catch (const NegativeMargin& e) {
            record_scan(e.result());
            auto st = detail::lower_bound_json(e.result());
            st["tau"] = *tau_eval;
            st["status"] = "failed";
            st["reason"] = e.what();
            doc["epsilon_d"] = st;
            fail("epsilon_d");
        }
    }

    // unit circle
    if (!want_certs) {
        doc["unit_circle"] = skipped("not requested");
    } else if (blocker || !op) {
        doc["unit_circle"] = skipped(blocker.value_or("no tau available"));
    } else {
        const auto v = unit_circle_test(built->system, *tau_eval, desc.scan, *cert, desc.a6_margin, tol);
        doc["unit_circle"] = {{"status", v.passed ? "passed" : "failed"},
                              {"min_mode_to_circle", num(v.min_mode_to_circle)},
                              {"min_mode_distance", num(v.min_mode_distance)},
                              {"min_abs_one_minus_transfer", num(v.min_abs_one_minus_transfer)},
                              {"truncation_slack", num(v.truncation_slack)},
                              {"one_margin", num(v.one_margin)},
                              {"grid_points", v.grid_points},
                              {"reason", v.reason.empty() ? json(nullptr) : json(v.reason)}};
        if (!v.passed) fail("unit_circle");
    }

    // power bound
    const auto battery = built ? probe_battery(built->system, seed) : std::vector<BatteryVector>{};
    if (!want_certs) {
        doc["power_bound"] = skipped("not requested");
    } else if (blocker || !op) {
        doc["power_bound"] = skipped(blocker.value_or("no tau available"));
    } else {
        json rows = json::array();
        std::vector<PowerBoundRow> series;
        bool all_ok = true;
        double worst = 0.0;
        for (std::size_t i = 0; i < battery.size(); ++i) {
            for (bool adj : {false, true}) {
                const auto vals = power_bound_integral(*op, desc.probe, battery[i].x, adj, tol);
                const double g = power_bound_growth(vals);
                const bool ok = g < power_bound_growth_limit;
                all_ok = all_ok && ok;
                worst = std::max(worst, g);
                json per_r = json::array();
                for (const auto& v : vals) {
                    per_r.push_back({{"r", v.r},
                                     {"value", num(v.value)},
                                     {"nodes", v.nodes},
                                     {"error", v.error.empty() ? json(nullptr) : json(v.error)}});
                    if (v.ok) series.push_back({v.r, v.value, i, adj});
                }
                rows.push_back({{"vector", battery[i].name},
                                {"vector_index", i},
                                {"adjoint", adj},
                                {"growth", num(g)},
                                {"ok", ok},
                                {"values", per_r}});
            }
        }
        std::stable_sort(series.begin(), series.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
        rep.powerbound = std::move(series);
        doc["power_bound"] = {{"status", all_ok ? "passed" : "failed"},
                              {"max_growth", num(worst)},
                              {"growth_limit", power_bound_growth_limit},
                              {"rows", rows}};
        if (!all_ok) fail("power_bound");
    }

    // decay
    if (!want_certs) {
        doc["decay"] = skipped("not requested");
    } else if (blocker || !op) {
        doc["decay"] = skipped(blocker.value_or("no tau available"));
    } else {
        const auto& sys = built->system;
        const std::size_t n = sys.truncation();
        const std::size_t h = sys.spectrum().head_size();
        numeric::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
        json rows = json::array();
        bool all_ok = true;
        for (std::size_t k = 0; k < desc.decay.n_random; ++k) {
            const bool tail_state = (k % 2 == 1) && h < n;
            const bool head_state = !tail_state && h > 0;
            const std::size_t lo = tail_state ? h : 0;
            const std::size_t hi = head_state ? h : n;
            const auto x0 = detail::normalized(detail::random_on(rng, n, lo, hi));
            const auto rec = decay_test(*op, x0, desc.decay.k_max, desc.decay.threshold);
            const bool ok = tail_state ? rec.decays() : rec.k_hit.has_value();
            all_ok = all_ok && ok;
            rows.push_back({{"index", k},
                            {"support", tail_state ? "tail" : (head_state ? "head" : "full")},
                            {"k_hit", rec.k_hit ? json(*rec.k_hit) : json(nullptr)},
                            {"final_ratio", num(rec.norms.back() / rec.norms.front())},
                            {"half_ratio", num(rec.norms[rec.norms.size() / 2] / rec.norms.front())},
                            {"sup_ratio", num(rec.sup_ratio)},
                            {"decays", rec.decays()},
                            {"ok", ok}});
        }
        doc["decay"] = {{"status", all_ok ? "passed" : "failed"},
                        {"k_max", desc.decay.k_max},
                        {"threshold", desc.decay.threshold},
                        {"records", rows}};
        if (!all_ok) fail("decay");
    }

    // trajectory
    if (!want_traj) {
        doc["trajectory"] = skipped("not requested");
    } else if (!op || (blocker && !(opt.mode == Mode::simulate && built))) {
        doc["trajectory"] = skipped(blocker.value_or("no tau available"));
    } else {
        const auto tr = sampled_trajectory(*op, battery.front().x, desc.trajectory.samples_per_period,
                                           desc.trajectory.periods);
        doc["trajectory"] = {{"status", "computed"},
                             {"tau", *tau_eval},
                             {"initial_vector", battery.front().name},
                             {"points", tr.points.size()},
                             {"final_norm", num(tr.points.back().norm)}};
        rep.trajectory = tr.points;
    }

    rep.passed = !blocker;
    doc["verdict"] = {{"passed", rep.passed}, {"reason", blocker ? json(*blocker) : json(nullptr)}};
    return rep;
}

} // namespace sdstab::harness
