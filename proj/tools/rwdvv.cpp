// Command-line driver: solves invariant tables, verifies the relation
// families, and exports tables. Exit codes: 0 success, 1 verification
// failure, 2 configuration error.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rwdvv/rwdvv.hpp"

namespace fs = std::filesystem;
using namespace rwdvv;

namespace {

struct CacheConfig {
    std::string dir; // empty disables caching
};

std::shared_ptr<const TargetModel> load_target(const std::string& spec) {
    TargetModel m;
    if (spec == "p2") {
        m = p2_model();
    } else if (spec == "p3") {
        m = p3_model();
    } else {
        Json j;
        try {
            j = Json::parse(read_file(spec));
        } catch (const Json::exception& e) {
            throw ConfigError("cannot parse model file '" + spec + "': " + e.what());
        }
        m = model_from_json(j);
    }
    auto violations = m.validate();
    if (!violations.empty()) {
        std::ostringstream os;
        os << "invalid target model '" << spec << "':";
        for (const auto& v : violations) os << "\n  - " << v;
        throw ConfigError(os.str());
    }
    return std::make_shared<const TargetModel>(std::move(m));
}

std::string cache_key(const TargetModel& model, const std::string& op, const std::string& params) {
    std::string blob = model_to_json(model).dump() + "|" + op + "|" + params;
    return hex64(fnv1a64(blob));
}

// Returns the cached table if present and readable; corrupted cache
// files are ignored with a warning and recomputed.
std::optional<InvariantTable> cache_load(const CacheConfig& cache, const std::string& key,
                                         std::shared_ptr<const TargetModel> model) {
    if (cache.dir.empty()) return std::nullopt;
    fs::path file = fs::path(cache.dir) / (key + ".json");
    if (!fs::exists(file)) return std::nullopt;
    try {
        Json j = Json::parse(read_file(file));
        return table_from_json(j, std::move(model));
    } catch (const std::exception& e) {
        std::cerr << "warning: ignoring corrupted cache file " << file.string() << " (" << e.what() << ")\n";
        return std::nullopt;
    }
}

void cache_store(const CacheConfig& cache, const std::string& key, const InvariantTable& table) {
    if (cache.dir.empty()) return;
    fs::path file = fs::path(cache.dir) / (key + ".json");
    atomic_write(file, table_to_json(table).dump(2) + "\n");
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) return;
    atomic_write(path, content);
}

InvariantTable solve_complex_cached(std::shared_ptr<const TargetModel> model, int dmax,
                                    const CacheConfig& cache, SolveReport* report_out) {
    std::string key = cache_key(*model, "gw", "dmax=" + std::to_string(dmax));
    if (auto cached = cache_load(cache, key, model)) {
        if (report_out) report_out->note = "table served from cache";
        return std::move(*cached);
    }
    auto [table, report] = solve_complex_p2(model, dmax);
    if (!report.ok) throw SolveError("complex solve left keys undetermined");
    cache_store(cache, key, table);
    if (report_out) *report_out = std::move(report);
    return std::move(table);
}

struct ParityCheck {
    bool ok = true;
    std::string log;
};

// |W| <= N and W = N (mod 2), entry by entry against the complex table.
ParityCheck parity_check(const TargetModel& m, const InvariantTable& complex_table,
                         const InvariantTable& real_table) {
    ParityCheck pc;
    std::ostringstream os;
    for (const auto& [key, e] : real_table.entries()) {
        if (key.sector != Sector::Real) continue;
        InvariantKey ck;
        ck.sector = Sector::Complex;
        ck.degree = key.degree;
        ck.insertions.assign(key.insertions.size(), 0);
        for (int i = 0; i < m.n_classes(); ++i)
            if (m.is_kept(i)) {
                std::vector<int> probe(ck.insertions);
                // fill the kept class count from the dimension rule
                for (int c = 0; c <= 3 * key.degree[0] + 2; ++c) {
                    probe[static_cast<size_t>(i)] = c;
                    if (m.complex_key_admissible(ck.degree, probe)) {
                        ck.insertions = probe;
                        break;
                    }
                }
                break;
            }
        auto nv = complex_table.get(ck);
        if (!nv) continue;
        BigInt w = e.value.num(), n = nv->num();
        bool entry_ok = e.value.is_integer() && nv->is_integer() && (w - n) % 2 == 0 &&
                        (w < 0 ? -w : w) <= n;
        if (!entry_ok) pc.ok = false;
        os << "  " << key_to_string(key, m) << " = " << e.value.str() << " vs N = " << nv->str()
           << (entry_ok ? "  ok" : "  VIOLATION") << "\n";
    }
    pc.log = os.str();
    return pc;
}

int cmd_gw(const std::string& target, int dmax, const std::string& out, const std::string& report_path,
           const CacheConfig& cache) {
    auto model = load_target(target);
    SolveReport report;
    InvariantTable table = solve_complex_cached(model, dmax, cache, &report);
    std::string table_json = table_to_json(table).dump(2) + "\n";
    write_output(out, table_json);
    std::ostringstream os;
    os << "complex invariant table for " << model->name << ", dmax=" << dmax << "\n";
    for (const auto& [k, e] : table.entries())
        os << "  " << key_to_string(k, *model) << " = " << e.value.str() << " [" << provenance_name(e.provenance)
           << "]\n";
    os << report.render();
    write_output(report_path, os.str());
    std::cout << os.str();
    if (out.empty()) std::cout << table_json;
    return 0;
}

int cmd_welschinger(const std::string& target, int dmax, const std::string& seeds_path,
                    const std::string& out, const std::string& report_path, bool run_cross,
                    const std::string& spin_tag, const CacheConfig& cache) {
    auto model = load_target(target);
    InvariantTable complex_table = solve_complex_cached(model, std::max(dmax, 1), cache, nullptr);
    InvariantTable seeds = standard_p2_real_seeds(model, spin_tag);
    if (!seeds_path.empty()) {
        try {
            seeds = table_from_json(Json::parse(read_file(seeds_path)), model);
        } catch (const Json::exception& e) {
            throw ConfigError("cannot parse seeds file: " + std::string(e.what()));
        }
    }
    std::string key = cache_key(*model, "welschinger",
                                "dmax=" + std::to_string(dmax) + "|seeds=" + table_to_json(seeds).dump() +
                                    "|spin=" + spin_tag);
    SolveOptions opt;
    opt.dmax = dmax;
    opt.spin_tag = spin_tag;
    std::optional<InvariantTable> table = cache_load(cache, key, model);
    SolveReport report;
    if (!table) {
        auto [t, r] = solve_real_p2(model, complex_table, seeds, opt);
        table = std::move(t);
        report = std::move(r);
        cache_store(cache, key, *table);
    } else {
        report.note = "table served from cache";
    }

    std::ostringstream os;
    os << "real invariant table for " << model->name << ", dmax=" << dmax << "\n";
    for (const auto& [k, e] : table->entries())
        os << "  " << key_to_string(k, *model) << " = " << e.value.str() << " [" << provenance_name(e.provenance)
           << "]\n";
    os << report.render();

    ParityCheck pc = parity_check(*model, complex_table, *table);
    os << "parity/bound check against the complex counts:\n" << pc.log;

    bool cross_ok = true;
    if (run_cross) {
        CrossReport cross = cross_consistency(model, complex_table, seeds, dmax, spin_tag);
        os << cross.render();
        cross_ok = cross.ok;
    }

    write_output(out, table_to_json(*table).dump(2) + "\n");
    write_output(report_path, os.str());
    std::cout << os.str();
    if (!report.ok || !pc.ok || !cross_ok) return 1;
    return 0;
}

int cmd_verify_wdvv(const std::string& target, int dmax, int tu_max, int energy, const CacheConfig& cache) {
    auto model = load_target(target);
    if (energy <= 0) energy = dmax;
    InvariantTable complex_table = solve_complex_cached(model, std::max(dmax, energy), cache, nullptr);
    InvariantTable seeds = standard_p2_real_seeds(model);
    SolveOptions opt;
    opt.dmax = energy;
    auto [real_table, report] = solve_real_p2(model, complex_table, seeds, opt);
    auto sweep = sweep_residuals(*model, complex_table, real_table, Truncation{tu_max, energy});
    std::cout << "residual sweep at tu-degree <= " << tu_max << ", energy <= " << energy << ": "
              << sweep.instances << " relation instances\n";
    for (const auto& f : sweep.failures) std::cout << "  " << f << "\n";
    std::cout << (sweep.all_zero ? "all residuals vanish\n" : "NONZERO RESIDUALS FOUND\n");
    return sweep.all_zero && report.ok ? 0 : 1;
}

int cmd_verify_trr(int lmax, const std::string& json_out) {
    bool all_ok = true;
    Json cases = Json::array();
    auto record = [&](const std::string& name, const Derivation& d) {
        all_ok = all_ok && d.match;
        Json c;
        c["case"] = name;
        c["derived"] = d.derived.render();
        c["stated"] = d.stated.render();
        c["match"] = d.match;
        cases.push_back(c);
        std::cout << (d.match ? "  ok      " : "  MISMATCH") << " " << name << ": " << d.derived.render()
                  << "\n";
    };
    std::cout << "cotangent recursion, complex family:\n";
    for (int l = 3; l <= lmax; ++l)
        for (int i = 2; i <= l; ++i)
            for (int j = 2; j <= l; ++j) {
                if (i == j) continue;
                record("complex l=" + std::to_string(l) + " (i,j)=(" + std::to_string(i) + "," +
                           std::to_string(j) + ")",
                       derive_thm1(l, i, j));
            }
    std::cout << "cotangent recursion, real families:\n";
    for (int k = 1; k <= lmax; ++k)
        for (int l = 1; 2 * l + k <= lmax; ++l)
            record("real first identity (k,l)=(" + std::to_string(k) + "," + std::to_string(l) + ")",
                   derive_thm2(k, l, Thm2Variant::NoConjugateIndex));
    for (int k = 0; k <= lmax; ++k)
        for (int l = 2; 2 * l + k <= lmax; ++l)
            for (int i = 2; i <= l; ++i)
                record("real second identity (k,l)=(" + std::to_string(k) + "," + std::to_string(l) +
                           ") i=" + std::to_string(i),
                       derive_thm2(k, l, Thm2Variant::WithIndex, i));

    std::cout << "pairing sweep against the cotangent integral oracle:\n";
    long long pair_cases = 0, pair_bad = 0;
    for (int l = 4; l <= lmax; ++l) {
        std::vector<int> exps(static_cast<size_t>(l), 0);
        std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == l) {
                if (left != 0) return;
                for (int i = 2; i <= l; ++i)
                    for (int j = 2; j <= l; ++j) {
                        if (i == j) continue;
                        auto [lhs, rhs] = pair_thm1(l, i, j, exps);
                        ++pair_cases;
                        if (lhs != rhs) ++pair_bad;
                    }
                return;
            }
            for (int e = 0; e <= left; ++e) {
                exps[static_cast<size_t>(pos)] = e;
                rec(pos + 1, left - e);
            }
            exps[static_cast<size_t>(pos)] = 0;
        };
        rec(0, l - 4);
    }
    std::cout << "  " << pair_cases << " pairings checked, " << pair_bad << " mismatches\n";
    all_ok = all_ok && pair_bad == 0;

    if (!json_out.empty()) {
        Json j;
        j["cases"] = cases;
        j["pairingsChecked"] = pair_cases;
        j["pairingMismatches"] = pair_bad;
        j["ok"] = all_ok;
        write_output(json_out, j.dump(2) + "\n");
    }
    std::cout << (all_ok ? "all derivations match\n" : "MISMATCHES FOUND\n");
    return all_ok ? 0 : 1;
}

int cmd_verify_thm3(int trials, uint64_t seed, int nmax, const std::string& json_out) {
    bool all_ok = true;
    Json report = Json::array();
    for (int n = 1; n <= nmax; ++n) {
        auto run = run_certificate_trials(seed, trials, n);
        std::cout << "n=" << n << ": " << run.instances << " instances, " << run.checks << " checks, "
                  << run.failures << " failures\n";
        for (const auto& d : run.failure_details) std::cout << "  " << d << "\n";
        Json r;
        r["n"] = n;
        r["instances"] = run.instances;
        r["checks"] = run.checks;
        r["failures"] = run.failures;
        report.push_back(r);
        all_ok = all_ok && run.failures == 0;
    }
    if (!json_out.empty()) {
        Json j;
        j["seed"] = seed;
        j["trialsPerSize"] = trials;
        j["runs"] = report;
        j["ok"] = all_ok;
        write_output(json_out, j.dump(2) + "\n");
    }
    std::cout << (all_ok ? "certificate holds on all trials\n" : "CERTIFICATE FAILURES\n");
    return all_ok ? 0 : 1;
}

int cmd_export(const std::string& target, const std::string& in, const std::string& csv_out,
               const std::string& json_out) {
    if (csv_out.empty() == json_out.empty())
        throw ConfigError("export: choose exactly one of --csv or --json");
    Json j;
    try {
        j = Json::parse(read_file(in));
    } catch (const Json::exception& e) {
        throw ConfigError("cannot parse table file: " + std::string(e.what()));
    }
    std::string model_spec = target;
    if (model_spec.empty()) {
        if (!j.contains("target")) throw ConfigError("table file lacks a target name; pass --target");
        model_spec = j.at("target").get<std::string>();
    }
    auto model = load_target(model_spec);
    InvariantTable table = table_from_json(j, model);
    if (!json_out.empty()) {
        write_output(json_out, table_to_json(table).dump(2) + "\n");
        return 0;
    }
    std::ostringstream os;
    os << "sector,degree,insertions,k,spinTag,value,provenance\n";
    for (const auto& [key, e] : table.entries()) {
        os << (key.sector == Sector::Complex ? "complex" : "real") << ",";
        for (size_t i = 0; i < key.degree.size(); ++i) os << (i ? " " : "") << key.degree[i];
        os << ",";
        bool first = true;
        for (int i = 0; i < model->n_classes(); ++i)
            if (key.insertions[static_cast<size_t>(i)] > 0) {
                os << (first ? "" : " ") << model->basis[static_cast<size_t>(i)].label << ":"
                   << key.insertions[static_cast<size_t>(i)];
                first = false;
            }
        os << ",";
        if (key.sector == Sector::Real) os << key.real_points;
        os << "," << key.spin_tag << "," << e.value.str() << "," << provenance_name(e.provenance) << "\n";
    }
    write_output(csv_out, os.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact-arithmetic engine for WDVV relations and real enumerative invariants"};
    app.require_subcommand(1);
    app.fallthrough(); // parent options may appear after the subcommand

    std::string cache_dir_flag;
    app.add_option("--cache-dir", cache_dir_flag, "cache directory (overrides RWDVV_CACHE_DIR)");

    auto cache = [&]() {
        CacheConfig c;
        if (!cache_dir_flag.empty()) {
            c.dir = cache_dir_flag;
        } else if (const char* env = std::getenv("RWDVV_CACHE_DIR")) {
            c.dir = env;
        }
        return c;
    };

    std::function<int()> task;

    // gw
    {
        auto* sub = app.add_subcommand("gw", "solve the complex invariant table");
        auto target = std::make_shared<std::string>("p2");
        auto dmax = std::make_shared<int>(4);
        auto out = std::make_shared<std::string>();
        auto report = std::make_shared<std::string>();
        sub->add_option("--target", *target, "built-in name (p2, p3) or model JSON path");
        sub->add_option("--dmax", *dmax, "maximal degree")->check(CLI::PositiveNumber);
        sub->add_option("--out", *out, "output table JSON path");
        sub->add_option("--report", *report, "output report text path");
        sub->callback([&, target, dmax, out, report] {
            task = [&, target, dmax, out, report] { return cmd_gw(*target, *dmax, *out, *report, cache()); };
        });
    }
    // welschinger
    {
        auto* sub = app.add_subcommand("welschinger", "solve the real invariant table");
        auto target = std::make_shared<std::string>("p2");
        auto dmax = std::make_shared<int>(3);
        auto seeds = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto report = std::make_shared<std::string>();
        auto spin = std::make_shared<std::string>();
        auto cross = std::make_shared<bool>(true);
        sub->add_option("--target", *target, "built-in name (p2, p3) or model JSON path");
        sub->add_option("--dmax", *dmax, "maximal degree")->check(CLI::PositiveNumber);
        sub->add_option("--seeds", *seeds, "seed table JSON (default: standard plane seeds)");
        sub->add_option("--out", *out, "output table JSON path");
        sub->add_option("--report", *report, "output report text path");
        sub->add_option("--spin-tag", *spin, "opaque tag attached to the real entries");
        sub->add_flag("--cross,!--no-cross", *cross, "run the two-family cross-consistency check");
        sub->callback([&, target, dmax, seeds, out, report, spin, cross] {
            task = [&, target, dmax, seeds, out, report, spin, cross] {
                return cmd_welschinger(*target, *dmax, *seeds, *out, *report, *cross, *spin, cache());
            };
        });
    }
    // verify
    {
        auto* sub = app.add_subcommand("verify", "verification suites");
        sub->require_subcommand(1);
        {
            auto* w = sub->add_subcommand("wdvv", "residual sweep on assembled potentials");
            auto target = std::make_shared<std::string>("p2");
            auto dmax = std::make_shared<int>(4);
            auto tu = std::make_shared<int>(10);
            auto en = std::make_shared<int>(0);
            w->add_option("--target", *target, "built-in name or model JSON path");
            w->add_option("--dmax", *dmax, "solve depth")->check(CLI::PositiveNumber);
            w->add_option("--tu-max", *tu, "t,u-degree bound of the sweep");
            w->add_option("--energy", *en, "energy bound of the sweep (default: dmax)");
            w->callback([&, target, dmax, tu, en] {
                task = [&, target, dmax, tu, en] { return cmd_verify_wdvv(*target, *dmax, *tu, *en, cache()); };
            });
        }
        {
            auto* t = sub->add_subcommand("trr", "cotangent recursion derivations and pairings");
            auto lmax = std::make_shared<int>(8);
            auto json_out = std::make_shared<std::string>();
            t->add_option("--lmax", *lmax, "bound on marked points")->check(CLI::PositiveNumber);
            t->add_option("--json", *json_out, "write a JSON report");
            t->callback([&, lmax, json_out] {
                task = [lmax, json_out] { return cmd_verify_trr(*lmax, *json_out); };
            });
        }
        {
            auto* t = sub->add_subcommand("thm3", "certificate trials on random jets");
            auto trials = std::make_shared<int>(100);
            auto seed = std::make_shared<uint64_t>(7);
            auto nmax = std::make_shared<int>(4);
            auto json_out = std::make_shared<std::string>();
            t->add_option("--trials", *trials, "instances per size")->check(CLI::PositiveNumber);
            t->add_option("--seed", *seed, "RNG seed");
            t->add_option("--nmax", *nmax, "largest basis size")->check(CLI::PositiveNumber);
            t->add_option("--json", *json_out, "write a JSON report");
            t->callback([&, trials, seed, nmax, json_out] {
                task = [trials, seed, nmax, json_out] {
                    return cmd_verify_thm3(*trials, *seed, *nmax, *json_out);
                };
            });
        }
    }
    // export
    {
        auto* sub = app.add_subcommand("export", "convert a table file");
        auto target = std::make_shared<std::string>();
        auto in = std::make_shared<std::string>();
        auto csv = std::make_shared<std::string>();
        auto json_out = std::make_shared<std::string>();
        sub->add_option("--target", *target, "model for label resolution (default: table's target field)");
        sub->add_option("--in", *in, "input table JSON")->required();
        sub->add_option("--csv", *csv, "output CSV path");
        sub->add_option("--json", *json_out, "output JSON path");
        sub->callback([&, target, in, csv, json_out] {
            task = [target, in, csv, json_out] { return cmd_export(*target, *in, *csv, *json_out); };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return task ? task() : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
