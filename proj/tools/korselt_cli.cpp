#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "korselt/pipeline.hpp"

namespace {

using korselt::Nat;
using korselt::ojson;

ojson read_json(const std::string& path) {
    if (path == "-") return ojson::parse(std::cin);
    std::ifstream in(path);
    if (!in) throw korselt::validation_error("cannot open input file: " + path);
    return ojson::parse(in);
}

void write_out(const std::string& path, const ojson& j) {
    if (path == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw korselt::validation_error("cannot open output file: " + path);
    out << j.dump(2) << "\n";
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw korselt::validation_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constructive Carmichael-number pipeline (smooth primes, divisor partitions, "
                 "admissible tuples, multiplier search, subset products, Korselt certification)"};
    app.require_subcommand(1);

    std::string in_path = "-";
    std::string out_path = "-";
    app.add_option("--in", in_path, "input JSON path, '-' for stdin")->capture_default_str();
    app.add_option("--out", out_path, "output JSON path, '-' for stdout")->capture_default_str();
    app.set_config("--config", "",
                   "key/value configuration file with a [pipeline] section; flags override it");

    // --- sieve ---------------------------------------------------------
    auto* sieve = app.add_subcommand("sieve", "build the smooth-shift prime set P");
    double sv_y = 20.0, sv_e = 0.25;
    std::vector<std::uint64_t> sv_exclude;
    sieve->add_option("--y", sv_y, "window upper bound")->required();
    sieve->add_option("--E", sv_e, "smoothness exponent, bound is y^(1-E)")->required();
    sieve->add_option("--exclude", sv_exclude, "primes to exclude");

    // --- partition -------------------------------------------------------
    auto* partition = app.add_subcommand("partition", "divisors of prod P split into spread subsets");
    std::size_t pt_m = 4;
    std::optional<std::size_t> pt_cap;
    partition->add_option("--M", pt_m, "subset size, a power of two")->required();
    partition->add_option("--cap", pt_cap, "keep only the cap smallest divisors");

    // --- forms ----------------------------------------------------------
    auto* forms = app.add_subcommand("forms", "residue lift and admissible linear forms for one subset");
    std::size_t fm_j = 1;
    forms->add_option("--j", fm_j, "subset index (1-based)")->required();

    // --- ksearch ----------------------------------------------------------
    auto* ks = app.add_subcommand("ksearch", "multipliers k with two primes among {d k + 1}");
    std::string ks_y;
    double ks_v = 2.0, ks_w = 1.0;
    bool ks_nofilter = false;
    std::optional<std::uint64_t> ks_limit;
    ks->add_option("--Y", ks_y, "window start; scan is [Y, 2Y)")->required();
    ks->add_option("--V", ks_v, "resonance tolerance 1/V");
    ks->add_option("--W", ks_w, "frequency bound |omega| < W");
    ks->add_flag("--no-filter", ks_nofilter, "skip the U(V, W) anti-clustering filter");
    ks->add_option("--k-limit", ks_limit, "scan at most this many k from Y");

    // --- subset -----------------------------------------------------------
    auto* subset = app.add_subcommand("subset", "divisors of prod(q_i) equal to 1 mod L in a log window");
    std::string sb_l;
    double sb_b = 0.0, sb_a = 1.0;
    std::optional<std::size_t> sb_limit;
    subset->add_option("--L", sb_l, "modulus")->required();
    subset->add_option("--B", sb_b, "window center offset (nats)");
    subset->add_option("--A", sb_a, "window half-width is 1/(2A)")->required();
    subset->add_option("--limit", sb_limit, "materialize at most this many solutions");

    // --- assemble -----------------------------------------------------------
    auto* assemble = app.add_subcommand("assemble", "multiply a prime subset into Pi and certify it");
    std::string as_k0, as_l;
    assemble->add_option("--k0", as_k0, "common multiplier")->required();
    assemble->add_option("--L", as_l, "divisor modulus")->required();

    // --- verify -----------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "Korselt certificate for one number");
    std::string vf_n;
    verify->add_option("--n", vf_n, "number to certify")->required();

    // --- scan -----------------------------------------------------------
    auto* scan = app.add_subcommand("scan", "Carmichael numbers in a short interval");
    std::string sc_z;
    double sc_delta = 1.0;
    scan->add_option("--z", sc_z, "interval start")->required();
    scan->add_option("--delta", sc_delta, "width exponent: width = z/(log z)^(1/(2+delta))");

    // --- bvstats -----------------------------------------------------------
    auto* bv = app.add_subcommand("bvstats", "exact prime-counting statistics");
    std::uint64_t bv_x = 100, bv_q = 1, bv_a = 0;
    std::optional<std::uint64_t> bv_exclude;
    std::optional<std::uint64_t> bv_totient;
    bool bv_error_sum_flag = false;
    std::string bv_csv;
    std::vector<std::string> bv_forms;
    std::uint64_t bv_tuple_lo = 1, bv_tuple_hi = 0;
    unsigned bv_tuple_m = 1;
    bv->add_option("--x", bv_x, "upper limit");
    bv->add_option("--q", bv_q, "modulus");
    bv->add_option("--a", bv_a, "residue class");
    bv->add_flag("--error-sum", bv_error_sum_flag, "tabulate the max error per modulus q <= x^(2/5)");
    bv->add_option("--exclude", bv_exclude, "exclude multiples of this modulus from the error sum");
    bv->add_option("--sum-inv-totient", bv_totient, "sum of 1/phi(k) for k <= this value");
    bv->add_option("--csv", bv_csv, "also write the error-sum rows as CSV to this path");
    bv->add_option("--form", bv_forms, "linear form 'd,c' for tuple counting (repeatable)");
    bv->add_option("--lo", bv_tuple_lo, "tuple count range start");
    bv->add_option("--hi", bv_tuple_hi, "tuple count range end (exclusive); default 2*lo");
    bv->add_option("--m", bv_tuple_m, "require at least m prime forms");

    // --- pipeline -----------------------------------------------------------
    auto* pipe = app.add_subcommand("pipeline", "run the full construction and record everything");
    korselt::RunConfig cfg;
    std::string pp_y_override, pp_eta, pp_v, pp_w, pp_a, pp_cap, pp_klimit;
    std::vector<double> pp_bgrid;
    pipe->configurable();
    pipe->add_option("--y", cfg.y, "sieve window upper bound")->capture_default_str();
    pipe->add_option("--E", cfg.E, "smoothness exponent")->capture_default_str();
    pipe->add_option("--delta", cfg.delta, "target delta")->capture_default_str();
    pipe->add_option("--eta", pp_eta, "override the observed eta");
    pipe->add_option("--M", cfg.M, "partition subset size")->capture_default_str();
    pipe->add_option("--exclude", cfg.exclusions, "primes excluded from P");
    pipe->add_option("--divisor-cap", pp_cap, "keep only this many smallest divisors");
    pipe->add_option("--Y", pp_y_override, "multiplier window start (default L*1000)");
    pipe->add_option("--k-limit", pp_klimit, "scan at most this many k from Y");
    pipe->add_option("--V", pp_v, "override the paper-nominal V");
    pipe->add_option("--W", pp_w, "override the paper-nominal W");
    pipe->add_option("--A", pp_a, "override the paper-nominal A");
    bool pp_nofilter = false;
    pipe->add_flag("--no-filter", pp_nofilter, "disable the U(V, W) filter");
    pipe->add_option("--B-grid", pp_bgrid, "window center offsets to try");
    pipe->add_option("--N-target", cfg.n_target, "largest even N to try")->capture_default_str();
    pipe->add_option("--mitm-limit", cfg.mitm_limit, "solutions materialized per (N, B)")
        ->capture_default_str();
    pipe->add_option("--threads", cfg.threads, "thread budget")->capture_default_str();

    // --- replay -----------------------------------------------------------
    auto* rp = app.add_subcommand("replay", "re-run a record's config and assert equality");
    std::string rp_record;
    rp->add_option("record", rp_record, "path to a RunRecord JSON")->required();

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sieve) {
            std::set<std::uint64_t> excl(sv_exclude.begin(), sv_exclude.end());
            write_out(out_path, korselt::to_json(korselt::build_smooth_primes(sv_y, sv_e, excl)));
        } else if (*partition) {
            auto s = korselt::smooth_set_from_json(read_json(in_path));
            auto divisors = korselt::enumerate_divisors(s, pt_cap);
            write_out(out_path, korselt::to_json(korselt::partition_divisors(s, divisors, pt_m)));
        } else if (*forms) {
            auto family = korselt::divisor_family_from_json(read_json(in_path));
            if (fm_j < 1 || fm_j > family.subsets.size())
                throw korselt::validation_error("forms: subset index out of range");
            Nat l_mod = 1;
            for (std::uint64_t p : family.source.primes) l_mod *= korselt::nat_from_u64(p);
            auto sel = korselt::make_residue_selection(family.source.primes,
                                                       family.subsets[fm_j - 1]);
            if (sel.empty()) throw korselt::validation_error("forms: the residue selection is empty");
            std::map<std::uint64_t, std::uint64_t> choice;
            for (const auto& [p, omega] : sel.per_prime) choice[p] = omega.front();
            Nat a_l = korselt::lift_residue(sel, choice);
            auto tuple = korselt::build_forms(family.subsets[fm_j - 1], l_mod, a_l, fm_j);
            ojson j = korselt::to_json(tuple);
            j["admissible"] = korselt::is_admissible(tuple);
            j["omega_size_ratio"] = sel.size_ratio;
            write_out(out_path, j);
        } else if (*ks) {
            auto family = korselt::divisor_family_from_json(read_json(in_path));
            Nat l_mod = 1;
            for (std::uint64_t p : family.source.primes) l_mod *= korselt::nat_from_u64(p);
            korselt::KWindow window{korselt::nat_from_decimal(ks_y), l_mod, ks_v, ks_w};
            Nat k_hi = 2 * window.Y;
            if (ks_limit) {
                Nat capped = window.Y + korselt::nat_from_u64(*ks_limit);
                if (capped < k_hi) k_hi = capped;
            }
            std::vector<korselt::JSearchInput> searches;
            for (std::size_t i = 0; i < family.subsets.size(); ++i) {
                if (!family.spread_ok[i]) continue;
                searches.push_back({i + 1, family.subsets[i],
                                    korselt::find_T(window, family.subsets[i], window.Y, k_hi)});
            }
            write_out(out_path,
                      korselt::to_json(korselt::pick_k0(window, searches, !ks_nofilter)));
        } else if (*subset) {
            auto primes = korselt::prime_list_from_json(read_json(in_path));
            korselt::WindowSpec wspec{sb_b, sb_a};
            auto res = korselt::mitm_subset_products(primes, korselt::nat_from_decimal(sb_l),
                                                     wspec, sb_limit);
            ojson j;
            j["schema_version"] = korselt::kSchemaVersion;
            j["count"] = res.count;
            ojson sols = ojson::array();
            for (const auto& s : res.solutions) sols.push_back(korselt::to_json(s));
            j["solutions"] = sols;
            write_out(out_path, j);
        } else if (*assemble) {
            auto primes = korselt::prime_list_from_json(read_json(in_path));
            auto cert = korselt::assemble_pi(primes, korselt::nat_from_decimal(as_k0),
                                             korselt::nat_from_decimal(as_l));
            write_out(out_path, korselt::to_json(cert));
        } else if (*verify) {
            write_out(out_path, korselt::to_json(korselt::korselt_check(korselt::nat_from_decimal(vf_n))));
        } else if (*scan) {
            auto [count, list] = korselt::scan_interval(korselt::nat_from_decimal(sc_z), sc_delta);
            ojson j;
            j["schema_version"] = korselt::kSchemaVersion;
            j["z"] = korselt::json_nat(korselt::nat_from_decimal(sc_z));
            j["delta"] = sc_delta;
            j["count"] = count;
            ojson arr = ojson::array();
            for (const Nat& n : list) arr.push_back(korselt::json_nat(n));
            j["carmichael_numbers"] = arr;
            write_out(out_path, j);
        } else if (*bv) {
            if (!bv_forms.empty()) {
                korselt::LinearFormTuple t;
                for (const std::string& f : bv_forms) {
                    auto comma = f.find(',');
                    if (comma == std::string::npos)
                        throw korselt::validation_error("--form expects 'd,c', got: " + f);
                    t.forms.emplace_back(korselt::nat_from_decimal(f.substr(0, comma)),
                                         korselt::nat_from_decimal(f.substr(comma + 1)));
                }
                Nat lo = korselt::nat_from_u64(bv_tuple_lo);
                Nat hi = bv_tuple_hi ? korselt::nat_from_u64(bv_tuple_hi) : Nat(2 * lo);
                auto count = korselt::count_prime_tuples_range(t, lo, hi, bv_tuple_m);
                write_out(out_path, ojson{{"forms", korselt::to_json(t)["forms"]},
                                          {"lo", korselt::json_nat(lo)},
                                          {"hi", korselt::json_nat(hi)},
                                          {"m", bv_tuple_m},
                                          {"count", count}});
            } else if (bv_totient) {
                auto [sum, dev] = korselt::sum_inv_totient(*bv_totient);
                write_out(out_path, ojson{{"x", *bv_totient},
                                          {"sum", sum},
                                          {"C1", korselt::kInvTotientC1},
                                          {"deviation", dev}});
            } else if (bv_error_sum_flag) {
                auto report = korselt::bv_error_sum(bv_x, bv_exclude);
                if (!bv_csv.empty()) {
                    std::ofstream csv(bv_csv);
                    if (!csv) throw korselt::validation_error("cannot open CSV path: " + bv_csv);
                    csv << "q,argmax_z,argmax_a,error\n";
                    for (const auto& row : report.per_q_max)
                        csv << row.q << "," << row.argmax_z << "," << row.argmax_a << ","
                            << row.error << "\n";
                }
                write_out(out_path, korselt::to_json(report));
            } else {
                write_out(out_path, korselt::to_json(korselt::prime_counts(bv_x, bv_q, bv_a)));
            }
        } else if (*pipe) {
            if (!pp_eta.empty()) cfg.eta_override = std::stod(pp_eta);
            if (!pp_cap.empty()) cfg.divisor_cap = std::stoull(pp_cap);
            if (!pp_y_override.empty()) cfg.y_override = korselt::nat_from_decimal(pp_y_override);
            if (!pp_klimit.empty()) cfg.k_scan_limit = std::stoull(pp_klimit);
            if (!pp_v.empty()) cfg.v_override = std::stod(pp_v);
            if (!pp_w.empty()) cfg.w_override = std::stod(pp_w);
            if (!pp_a.empty()) cfg.a_override = std::stod(pp_a);
            if (pp_nofilter) cfg.u_filter = false;
            if (!pp_bgrid.empty()) cfg.b_grid = pp_bgrid;
            write_out(out_path, korselt::run_pipeline(cfg));
        } else if (*rp) {
            ojson record = ojson::parse(read_text(rp_record));
            ojson fresh = korselt::replay(record);
            write_out(out_path, fresh);
        }
    } catch (const korselt::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const korselt::budget_error& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 2;
    } catch (const korselt::consistency_error& e) {
        std::cerr << "internal consistency error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
