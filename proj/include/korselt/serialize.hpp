#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "korselt/bvstats.hpp"
#include "korselt/carmichael.hpp"
#include "korselt/divisors.hpp"
#include "korselt/forms.hpp"
#include "korselt/ksearch.hpp"
#include "korselt/nat.hpp"
#include "korselt/smoothset.hpp"
#include "korselt/subsetprod.hpp"

namespace korselt {

// Insertion-ordered JSON keeps record serialization byte-stable.
using ojson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Nat fields serialize as decimal strings everywhere; nothing that can cross
// 2^53 is ever emitted as a JSON float.
inline ojson json_nat(const Nat& n) { return to_decimal(n); }

inline Nat nat_from_json(const ojson& j) {
    if (j.is_string()) return nat_from_decimal(j.get<std::string>());
    if (j.is_number_unsigned()) return nat_from_u64(j.get<std::uint64_t>());
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
        return nat_from_u64(static_cast<std::uint64_t>(j.get<std::int64_t>()));
    throw validation_error("expected a natural number, got: " + j.dump());
}

inline ojson to_json(const Factorization& f) {
    ojson arr = ojson::array();
    for (const auto& [p, e] : f.factors) arr.push_back(ojson::array({json_nat(p), e}));
    return arr;
}

inline ojson to_json(const SmoothPrimeSet& s) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["y"] = s.y;
    j["E"] = s.E;
    j["exclusions"] = s.exclusions;
    j["primes"] = s.primes;
    j["eta"] = s.eta_observed;
    return j;
}

inline SmoothPrimeSet smooth_set_from_json(const ojson& j) {
    SmoothPrimeSet s;
    s.y = j.at("y").get<double>();
    s.E = j.at("E").get<double>();
    if (j.contains("exclusions"))
        for (const auto& e : j.at("exclusions")) s.exclusions.insert(e.get<std::uint64_t>());
    for (const auto& p : j.at("primes")) s.primes.push_back(p.get<std::uint64_t>());
    s.eta_observed = j.contains("eta") ? j.at("eta").get<double>() : 0.0;
    return s;
}

inline ojson to_json(const DivisorFamily& f) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["source"] = to_json(f.source);
    j["M"] = f.M;
    ojson divs = ojson::array();
    for (const Nat& d : f.divisors) divs.push_back(json_nat(d));
    j["divisors"] = divs;
    ojson subsets = ojson::array();
    for (std::size_t i = 0; i < f.subsets.size(); ++i) {
        ojson s;
        s["j"] = i + 1;
        ojson elems = ojson::array();
        for (const Nat& d : f.subsets[i]) elems.push_back(json_nat(d));
        s["divisors"] = elems;
        s["spread_ok"] = static_cast<bool>(f.spread_ok[i]);
        subsets.push_back(s);
    }
    j["subsets"] = subsets;
    return j;
}

inline DivisorFamily divisor_family_from_json(const ojson& j) {
    DivisorFamily f;
    f.source = smooth_set_from_json(j.at("source"));
    f.M = j.at("M").get<std::size_t>();
    for (const auto& d : j.at("divisors")) f.divisors.push_back(nat_from_json(d));
    for (const auto& s : j.at("subsets")) {
        std::vector<Nat> subset;
        for (const auto& d : s.at("divisors")) subset.push_back(nat_from_json(d));
        f.subsets.push_back(std::move(subset));
        f.spread_ok.push_back(s.at("spread_ok").get<bool>());
    }
    return f;
}

inline ojson to_json(const LinearFormTuple& t) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    ojson forms = ojson::array();
    for (const auto& [d, c] : t.forms) forms.push_back(ojson::array({json_nat(d), json_nat(c)}));
    j["forms"] = forms;
    if (t.provenance) {
        ojson p;
        p["L"] = json_nat(t.provenance->L);
        p["a_L"] = json_nat(t.provenance->a_L);
        p["subset_id"] = t.provenance->subset_id;
        j["provenance"] = p;
    }
    return j;
}

inline ojson to_json(const KHit& hit) {
    ojson j;
    j["k"] = json_nat(hit.k);
    ojson w = ojson::array();
    for (const auto& [d, prime] : hit.witnesses)
        w.push_back(ojson{{"d", json_nat(d)}, {"prime", json_nat(prime)}});
    j["witnesses"] = w;
    return j;
}

inline ojson to_json(const KSearchResult& r) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["window"] = ojson{{"Y", json_nat(r.window.Y)},
                        {"L", json_nat(r.window.L)},
                        {"V", r.window.V},
                        {"W", r.window.W}};
    ojson per_j = ojson::array();
    for (const auto& [jid, hits] : r.per_j_hits) {
        ojson row;
        row["j"] = jid;
        ojson hs = ojson::array();
        for (const auto& h : hits) hs.push_back(to_json(h));
        row["hits"] = hs;
        per_j.push_back(row);
    }
    j["per_j_hits"] = per_j;
    j["k0"] = json_nat(r.k0);
    j["j_count_at_k0"] = r.j_count_at_k0;
    ojson q = ojson::array();
    for (const auto& e : r.q_set)
        q.push_back(ojson{{"prime", json_nat(e.prime)}, {"d", json_nat(e.d)}, {"j", e.j}});
    j["Q"] = q;
    return j;
}

inline ojson to_json(const SubsetSolution& s) {
    ojson j;
    j["indices"] = s.chosen;
    j["d"] = json_nat(s.d);
    j["log_offset"] = s.log_offset;
    return j;
}

inline ojson to_json(const CarmichaelCertificate& c) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["n"] = json_nat(c.n);
    j["factors"] = to_json(c.factors);
    j["squarefree"] = c.squarefree;
    j["korselt_ok"] = c.korselt_ok;
    ojson tr = ojson::array();
    for (const auto& [p, rem] : c.divisibility_transcript)
        tr.push_back(ojson::array({json_nat(p), json_nat(rem)}));
    j["divisibility_transcript"] = tr;
    if (c.congruence_checks) {
        j["congruence_checks"] = ojson{{"k0", json_nat(c.congruence_checks->k0)},
                                       {"L", json_nat(c.congruence_checks->L)},
                                       {"n_mod_k0L", json_nat(c.congruence_checks->n_mod_k0l)}};
    }
    if (c.window) {
        // reals past 2^53 go out as strings, like every oversized number
        ojson width;
        if (std::isfinite(c.window->width) && std::fabs(c.window->width) < 9007199254740992.0) {
            width = c.window->width;
        } else {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", c.window->width);
            width = std::string(buf);
        }
        j["window"] = ojson{{"z", json_nat(c.window->z)},
                            {"width", width},
                            {"inside", c.window->inside}};
    }
    j["primality_mode"] = c.primality_mode;
    return j;
}

inline ojson to_json(const APCounts& c) {
    ojson j;
    j["x"] = c.x;
    j["q"] = c.q;
    j["a"] = c.a;
    j["pi"] = c.pi_qa;
    j["theta"] = c.theta_qa;
    j["psi"] = c.psi_qa;
    return j;
}

inline ojson to_json(const ErrorSumReport& r) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["x"] = r.x;
    j["q_ceiling"] = r.q_ceiling;
    if (r.excluded_modulus) j["excluded_modulus"] = *r.excluded_modulus;
    ojson rows = ojson::array();
    for (const auto& row : r.per_q_max) {
        rows.push_back(ojson{{"q", row.q},
                             {"argmax_z", row.argmax_z},
                             {"argmax_a", row.argmax_a},
                             {"error", row.error}});
    }
    j["per_q_max"] = rows;
    j["total"] = r.total;
    return j;
}

inline ojson to_json(const BoundReport& r) {
    ojson j;
    j["N"] = r.n_primes;
    j["A"] = r.a_value;
    j["q0"] = json_nat(r.q0);
    j["count_exact"] = r.count_exact;
    j["paper_bound"] = r.paper_bound;
    j["count_exceeds_bound"] = r.exceeds_bound;
    j["hypotheses_met"] = r.hypotheses_met;
    j["hypotheses_note"] = r.hypotheses_note;
    return j;
}

inline ojson to_json(const NonclusterReport& r) {
    ojson j;
    j["threshold"] = r.threshold;
    j["max_fraction"] = r.max_fraction;
    j["omega_at"] = r.omega_at;
    j["alpha_at"] = r.alpha_at;
    j["omega_samples"] = r.omega_samples;
    j["alpha_samples"] = r.alpha_samples;
    return j;
}

inline ojson to_json(const PipelineParams& p) {
    ojson j;
    j["y"] = p.y;
    j["E"] = p.E;
    j["eta"] = p.eta;
    j["delta"] = p.delta;
    j["Delta"] = p.Delta;
    j["M"] = p.M;
    j["N_minus"] = p.N_minus;
    j["N_plus"] = p.N_plus;
    j["n_range_degenerate"] = p.n_range_degenerate;
    j["V"] = p.V;
    j["W"] = p.W;
    j["A"] = p.A;
    j["log_upsilon"] = p.upsilon_log;
    if (std::isfinite(p.xi_log)) j["log_xi"] = p.xi_log;
    if (std::isfinite(p.kappa_log)) j["log_kappa"] = p.kappa_log;
    j["kappa"] = p.kappa_description;
    j["log_z_minus"] = p.z_minus_log;
    j["log_z_plus"] = p.z_plus_log;
    return j;
}

inline std::vector<Nat> prime_list_from_json(const ojson& j) {
    const ojson& arr = j.is_array() ? j : j.at("primes");
    std::vector<Nat> out;
    for (const auto& v : arr) out.push_back(nat_from_json(v));
    return out;
}

} // namespace korselt
