#pragma once

#include <chrono>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "korselt/serialize.hpp"

namespace korselt {

inline constexpr const char* kToolVersion = "korselt 0.1.0";

// Every free parameter identified across the modules, in one validated record.
struct RunConfig {
    double y = 20.0;
    double E = 0.25;
    double delta = 1.0;
    std::optional<double> eta_override; // default: eta observed from the sieve
    std::size_t M = 4;
    std::vector<std::uint64_t> exclusions;
    std::optional<std::size_t> divisor_cap;
    std::optional<Nat> y_override;            // Y multiplier window start (paper: Upsilon L)
    std::optional<std::uint64_t> k_scan_limit; // scan [Y, min(2Y, Y + limit))
    std::optional<double> v_override, w_override, a_override;
    bool u_filter = true;
    std::vector<double> b_grid{0.0};
    std::uint64_t n_target = 16;
    std::size_t mitm_limit = 16;
    std::size_t threads = 1;
    std::uint64_t noncluster_omega_samples = 64;
    NtBudget budget{};

    void validate() const {
        if (!(y >= 10.0)) throw validation_error("config: y >= 10 required");
        if (!(E > 0.0 && E < 1.0)) throw validation_error("config: 0 < E < 1 required");
        if (!(delta > 0.0)) throw validation_error("config: delta > 0 required");
        if (M < 1 || (M & (M - 1)) != 0)
            throw validation_error("config: M must be a positive power of two");
        if (b_grid.empty()) throw validation_error("config: B grid must be nonempty");
        if (n_target < 2) throw validation_error("config: N target must be >= 2");
        if (mitm_limit < 1) throw validation_error("config: mitm limit must be >= 1");
        if (threads < 1) throw validation_error("config: thread budget must be >= 1");
        if (k_scan_limit && *k_scan_limit < 1)
            throw validation_error("config: k scan limit must be >= 1");
        if (budget.sieve_ceiling < 100 || budget.trial_division_bound < 100)
            throw validation_error("config: budgets too small");
    }
};

inline ojson to_json(const RunConfig& c) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["y"] = c.y;
    j["E"] = c.E;
    j["delta"] = c.delta;
    if (c.eta_override) j["eta_override"] = *c.eta_override;
    j["M"] = c.M;
    j["exclusions"] = c.exclusions;
    if (c.divisor_cap) j["divisor_cap"] = *c.divisor_cap;
    if (c.y_override) j["Y_override"] = json_nat(*c.y_override);
    if (c.k_scan_limit) j["k_scan_limit"] = *c.k_scan_limit;
    if (c.v_override) j["V"] = *c.v_override;
    if (c.w_override) j["W"] = *c.w_override;
    if (c.a_override) j["A"] = *c.a_override;
    j["u_filter"] = c.u_filter;
    j["B_grid"] = c.b_grid;
    j["N_target"] = c.n_target;
    j["mitm_limit"] = c.mitm_limit;
    j["threads"] = c.threads;
    j["noncluster_omega_samples"] = c.noncluster_omega_samples;
    j["budget"] = ojson{{"sieve_ceiling", c.budget.sieve_ceiling},
                        {"trial_division_bound", c.budget.trial_division_bound},
                        {"rho_rounds", c.budget.rho_rounds},
                        {"extra_mr_rounds", c.budget.extra_mr_rounds}};
    return j;
}

inline RunConfig run_config_from_json(const ojson& j) {
    RunConfig c;
    c.y = j.at("y").get<double>();
    c.E = j.at("E").get<double>();
    c.delta = j.at("delta").get<double>();
    if (j.contains("eta_override")) c.eta_override = j.at("eta_override").get<double>();
    c.M = j.at("M").get<std::size_t>();
    if (j.contains("exclusions"))
        c.exclusions = j.at("exclusions").get<std::vector<std::uint64_t>>();
    if (j.contains("divisor_cap")) c.divisor_cap = j.at("divisor_cap").get<std::size_t>();
    if (j.contains("Y_override")) c.y_override = nat_from_json(j.at("Y_override"));
    if (j.contains("k_scan_limit")) c.k_scan_limit = j.at("k_scan_limit").get<std::uint64_t>();
    if (j.contains("V")) c.v_override = j.at("V").get<double>();
    if (j.contains("W")) c.w_override = j.at("W").get<double>();
    if (j.contains("A")) c.a_override = j.at("A").get<double>();
    if (j.contains("u_filter")) c.u_filter = j.at("u_filter").get<bool>();
    if (j.contains("B_grid")) c.b_grid = j.at("B_grid").get<std::vector<double>>();
    if (j.contains("N_target")) c.n_target = j.at("N_target").get<std::uint64_t>();
    if (j.contains("mitm_limit")) c.mitm_limit = j.at("mitm_limit").get<std::size_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
    if (j.contains("noncluster_omega_samples"))
        c.noncluster_omega_samples = j.at("noncluster_omega_samples").get<std::uint64_t>();
    if (j.contains("budget")) {
        const auto& b = j.at("budget");
        if (b.contains("sieve_ceiling")) c.budget.sieve_ceiling = b.at("sieve_ceiling");
        if (b.contains("trial_division_bound"))
            c.budget.trial_division_bound = b.at("trial_division_bound");
        if (b.contains("rho_rounds")) c.budget.rho_rounds = b.at("rho_rounds");
        if (b.contains("extra_mr_rounds")) c.budget.extra_mr_rounds = b.at("extra_mr_rounds");
    }
    return c;
}

namespace detail {

// floor(e^x) as a Nat, for window endpoints far past the double range
inline Nat floor_exp(double x) {
    if (x < 0.0) return Nat(0);
    mpfr_t v;
    mpfr_init2(v, 256);
    mpfr_set_d(v, x, MPFR_RNDN);
    mpfr_exp(v, v, MPFR_RNDN);
    Nat out;
    mpfr_get_z(out.get_mpz_t(), v, MPFR_RNDD);
    mpfr_clear(v);
    return out;
}

class StageClock {
public:
    void start(const std::string& stage) {
        stage_ = stage;
        t0_ = std::chrono::steady_clock::now();
    }
    void stop(ojson& timings) {
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        timings[stage_] = dt;
    }

private:
    std::string stage_;
    std::chrono::steady_clock::time_point t0_;
};

} // namespace detail

// The section 3 -> section 4 construction executed as computation: sieve ->
// partition -> residue lifts and admissible forms per subset -> multiplier
// search -> pigeonhole k0 -> subset products per (N, B) -> certificates.
// Stages after an empty intermediate result short-circuit with a structured
// "no solutions at this scale" outcome; that is a normal exit, not an error.
inline ojson run_pipeline(const RunConfig& config) {
    config.validate();
    ojson record;
    ojson timings;
    detail::StageClock clock;
    record["schema_version"] = kSchemaVersion;
    record["tool_version"] = kToolVersion;
    record["config"] = to_json(config);

    auto finish = [&](const std::string& outcome, const std::string& detail_msg) -> ojson& {
        record["outcome"] = outcome;
        if (!detail_msg.empty()) record["outcome_detail"] = detail_msg;
        record["timings"] = timings;
        return record;
    };

    // --- sieve ---------------------------------------------------------
    clock.start("sieve");
    std::set<std::uint64_t> excl(config.exclusions.begin(), config.exclusions.end());
    SmoothPrimeSet smooth = build_smooth_primes(config.y, config.E, excl, config.budget);
    clock.stop(timings);
    record["smooth_set"] = to_json(smooth);

    const double eta_used = config.eta_override.value_or(smooth.eta_observed);
    PipelineParams nominal =
        compute_params(config.y, config.E, eta_used, config.delta, config.M, config.n_target);
    record["params_nominal"] = to_json(nominal);

    if (smooth.primes.empty())
        return finish("no_solutions_at_this_scale", "sieve produced an empty smooth prime set");

    Nat l_mod = 1;
    for (std::uint64_t p : smooth.primes) l_mod *= nat_from_u64(p);

    // paper-prescribed values logged next to what this run actually uses
    const double v_used = config.v_override.value_or(nominal.V);
    const double w_used = std::max(1.0, config.w_override.value_or(nominal.W));
    const double a_used = config.a_override.value_or(nominal.A);
    Nat y_used = config.y_override.value_or(l_mod * 1000);
    {
        ojson table;
        table["Y"] = ojson{{"nominal_log", nominal.upsilon_log + log_nat(l_mod)},
                           {"used", json_nat(y_used)}};
        table["V"] = ojson{{"nominal", nominal.V}, {"used", v_used}};
        table["W"] = ojson{{"nominal", nominal.W}, {"used", w_used}};
        table["A"] = ojson{{"nominal", nominal.A}, {"used", a_used}};
        table["N_range"] = ojson{{"nominal", ojson::array({nominal.N_minus, nominal.N_plus})},
                                 {"used_max", config.n_target}};
        double log_y_used = log_nat(y_used);
        table["B_range"] = ojson{{"nominal", ojson::array({-log_y_used, log_y_used})},
                                 {"used_grid", config.b_grid}};
        record["params_used"] = table;
    }

    // --- partition -------------------------------------------------------
    clock.start("partition");
    const std::size_t need = 2 * config.M * config.M;
    std::size_t divisor_count =
        smooth.primes.size() >= 40 ? SIZE_MAX : (std::size_t(1) << smooth.primes.size());
    if (config.divisor_cap) divisor_count = std::min(divisor_count, *config.divisor_cap);
    if (divisor_count < need) {
        clock.stop(timings);
        return finish("no_solutions_at_this_scale",
                      "fewer than 2M*M divisors available for the partition");
    }
    DivisorFamily family =
        partition_divisors(smooth, enumerate_divisors(smooth, config.divisor_cap), config.M);
    clock.stop(timings);
    record["divisor_family"] = to_json(family);

    std::vector<std::size_t> used_j;
    for (std::size_t i = 0; i < family.subsets.size(); ++i)
        if (family.spread_ok[i]) used_j.push_back(i);
    record["subsets_discarded_for_spread"] = family.subsets.size() - used_j.size();
    if (used_j.empty())
        return finish("no_solutions_at_this_scale", "no subset met the spread > 1 requirement");

    // --- residue lifts + admissible forms per subset ----------------------
    clock.start("forms");
    ojson forms_report = ojson::array();
    std::vector<std::size_t> form_ok_j;
    for (std::size_t i : used_j) {
        ojson row;
        row["j"] = i + 1;
        ResidueSelection sel = make_residue_selection(smooth.primes, family.subsets[i]);
        row["omega_size_ratio"] = sel.size_ratio;
        if (sel.empty()) {
            row["omega_empty"] = true;
            forms_report.push_back(row);
            continue;
        }
        // first lift in lexicographic order of per-prime choices
        std::map<std::uint64_t, std::uint64_t> choice;
        for (const auto& [p, omega] : sel.per_prime) choice[p] = omega.front();
        Nat a_l = lift_residue(sel, choice);
        LinearFormTuple tuple = build_forms(family.subsets[i], l_mod, a_l, i + 1);
        bool admissible = is_admissible(tuple, std::nullopt, config.budget);
        if (!admissible)
            throw consistency_error("pipeline: constructed form tuple is not admissible (j=" +
                                    std::to_string(i + 1) + ")");
        row["a_L"] = json_nat(a_l);
        row["admissible"] = admissible;
        forms_report.push_back(row);
        form_ok_j.push_back(i);
    }
    clock.stop(timings);
    record["forms"] = forms_report;
    if (form_ok_j.empty())
        return finish("no_solutions_at_this_scale", "every residue selection was empty");

    // --- multiplier search -------------------------------------------------
    clock.start("ksearch");
    KWindow window{y_used, l_mod, v_used, w_used};
    Nat k_hi = 2 * y_used;
    if (config.k_scan_limit) {
        Nat capped = y_used + nat_from_u64(*config.k_scan_limit);
        if (capped < k_hi) k_hi = capped;
    }

    std::vector<JSearchInput> searches(form_ok_j.size());
    {
        // per-j searches are independent; leftover thread budget goes to the
        // in-search block parallelism
        std::size_t batch = std::max<std::size_t>(config.threads, 1);
        std::size_t inner = std::max<std::size_t>(config.threads / form_ok_j.size(), 1);
        for (std::size_t base = 0; base < form_ok_j.size(); base += batch) {
            std::vector<std::future<JSearchInput>> futs;
            for (std::size_t t = base; t < std::min(base + batch, form_ok_j.size()); ++t) {
                std::size_t i = form_ok_j[t];
                futs.push_back(std::async(
                    batch > 1 ? std::launch::async : std::launch::deferred,
                    [&, i]() -> JSearchInput {
                        return {i + 1, family.subsets[i],
                                find_T(window, family.subsets[i], y_used, k_hi, config.budget,
                                       inner)};
                    }));
            }
            for (std::size_t t = 0; t < futs.size(); ++t) searches[base + t] = futs[t].get();
        }
    }
    ojson ksearch_stats = ojson::array();
    bool any_hits = false;
    for (const auto& js : searches) {
        std::size_t in_u_count = 0;
        for (const auto& hit : js.hits)
            if (in_U(hit.k, js.subset, v_used, w_used)) ++in_u_count;
        ojson row;
        row["j"] = js.j;
        row["T_size"] = js.hits.size();
        row["T_intersect_U"] = in_u_count;
        row["survivors"] = config.u_filter ? js.hits.size() - in_u_count : js.hits.size();
        ksearch_stats.push_back(row);
        if (!js.hits.empty()) any_hits = true;
    }
    record["ksearch_stats"] = ksearch_stats;
    if (!any_hits) {
        clock.stop(timings);
        return finish("no_solutions_at_this_scale", "no multiplier produced two primes");
    }

    KSearchResult ksr;
    try {
        ksr = pick_k0(window, searches, config.u_filter);
    } catch (const validation_error&) {
        clock.stop(timings);
        return finish("no_solutions_at_this_scale", "the U filter removed every multiplier");
    }
    clock.stop(timings);
    record["ksearch"] = to_json(ksr);

    // --- subset products over the (N, B) grid -----------------------------
    clock.start("subset");
    std::vector<Nat> q_primes;
    for (const auto& e : ksr.q_set) q_primes.push_back(e.prime);
    if (q_primes.size() < 2) {
        clock.stop(timings);
        return finish("no_solutions_at_this_scale", "fewer than two witness primes at k0");
    }

    Nat lambda_l = 1, phi_l = 1;
    for (std::uint64_t p : smooth.primes) {
        Nat pm1 = nat_from_u64(p - 1);
        mpz_lcm(lambda_l.get_mpz_t(), lambda_l.get_mpz_t(), pm1.get_mpz_t());
        phi_l *= pm1;
    }
    const Nat q0 = *std::max_element(q_primes.begin(), q_primes.end());

    {
        PipelineParams with_xi =
            compute_params(config.y, config.E, eta_used, config.delta, config.M, q_primes.size(),
                           log_nat(phi_l), log_nat(q0));
        double kappa_log = 0.0;
        for (std::uint64_t p : smooth.primes) kappa_log += 2.0 * std::log(static_cast<double>(p));
        with_xi.kappa_log = kappa_log;
        record["params_nominal"] = to_json(with_xi);
        // the diagnostic uses the A this run actually applied, not the nominal
        double xi_used = std::pow(a_used * static_cast<double>(q_primes.size()) *
                                      mpz_get_d(phi_l.get_mpz_t()) * log_nat(q0),
                                  2.0);
        if (std::isfinite(xi_used) && xi_used > 1.0) {
            record["noncluster"] =
                to_json(noncluster_check(q_primes, lambda_l, q0, a_used, xi_used,
                                         config.noncluster_omega_samples));
        } else {
            record["noncluster"] = ojson{{"skipped", "Xi is not representable as a double"}};
        }
    }

    ojson mitm_report = ojson::array();
    std::vector<CarmichaelCertificate> certificates;
    std::set<std::string> seen_pi;
    for (std::uint64_t n_val = 2; n_val <= std::min<std::uint64_t>(q_primes.size(), config.n_target);
         n_val += 2) {
        std::vector<Nat> q_n(q_primes.begin(), q_primes.begin() + n_val);
        for (double b_val : config.b_grid) {
            WindowSpec wspec{b_val, a_used};
            MitmResult mitm = mitm_subset_products(q_n, l_mod, wspec, config.mitm_limit);
            ojson row;
            row["N"] = n_val;
            row["B"] = b_val;
            row["count"] = mitm.count;
            row["bound"] = to_json(bound_report(n_val, a_used, q0, mitm.count, mpz_get_d(lambda_l.get_mpz_t()),
                                                log_nat(phi_l)));
            ojson sols = ojson::array();
            for (const auto& sol : mitm.solutions) {
                sols.push_back(to_json(sol));
                if (sol.chosen.size() < 3) continue; // a Carmichael number needs 3 factors
                std::vector<Nat> chosen_primes;
                for (std::size_t idx : sol.chosen) chosen_primes.push_back(q_n[idx]);
                // window residency of Pi itself, in plain (non-log) terms
                double total_log = 0.0;
                for (const Nat& q : q_n) total_log += log_nat(q);
                double lo_log = total_log / 2.0 + b_val - wspec.half_width();
                double hi_log = total_log / 2.0 + b_val + wspec.half_width();
                WindowBlock wb;
                wb.z = detail::floor_exp(lo_log);
                wb.width = hi_log >= 700.0 ? std::numeric_limits<double>::infinity()
                                           : std::exp(hi_log) - std::exp(std::max(lo_log, -700.0));
                wb.inside = std::fabs(sol.log_offset) < wspec.half_width();
                CarmichaelCertificate cert =
                    assemble_pi(chosen_primes, ksr.k0, l_mod, wb, config.budget);
                if (!cert.korselt_ok)
                    throw consistency_error("pipeline: certificate failed Korselt");
                if (seen_pi.insert(to_decimal(cert.n)).second)
                    certificates.push_back(std::move(cert));
            }
            row["solutions"] = sols;
            mitm_report.push_back(row);
        }
    }
    clock.stop(timings);
    record["subset_stage"] = mitm_report;

    ojson certs = ojson::array();
    for (const auto& c : certificates) certs.push_back(to_json(c));
    record["certificates"] = certs;

    if (certificates.empty())
        return finish("no_solutions_at_this_scale",
                      "no subset product with >= 3 factors landed on 1 mod L inside a window");
    return finish("certificates", "");
}

// Re-execute from the config embedded in a record and require equality of all
// non-timing fields; the first divergent path is reported on mismatch.
inline ojson replay(const ojson& record) {
    if (!record.contains("config")) throw validation_error("replay: record has no config");
    RunConfig config = run_config_from_json(record.at("config"));
    ojson fresh = run_pipeline(config);

    ojson a = record;
    ojson b = fresh;
    a.erase("timings");
    b.erase("timings");
    if (a != b) {
        // locate the first diverging top-level key for the diagnostic
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key()) || b.at(it.key()) != it.value())
                throw validation_error("replay mismatch at field '" + it.key() + "'");
        }
        throw validation_error("replay mismatch: fresh record has extra fields");
    }
    return fresh;
}

} // namespace korselt
