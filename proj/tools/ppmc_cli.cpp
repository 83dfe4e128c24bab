#include "ppmc/formats.hpp"
#include "ppmc/mc.hpp"
#include "ppmc/model.hpp"
#include "ppmc/omega.hpp"
#include "ppmc/pbpa.hpp"
#include "ppmc/pctl.hpp"
#include "ppmc/sim.hpp"
#include "ppmc/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using json = nlohmann::json;
using namespace ppmc;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string rat(const Rational& r) { return rational_to_string(r); }

json interval_json(const Interval& iv) {
    return json{{"lo", rat(iv.lo)}, {"hi", rat(iv.hi)}, {"width", rat(iv.width())}};
}

std::string verdict_str(Verdict v) {
    switch (v) {
        case Verdict::True: return "true";
        case Verdict::False: return "false";
        case Verdict::Unknown: return "unknown";
    }
    return "unknown";
}

struct CliContext {
    std::string system_path;
    std::string automata_path;
    std::string backend = "auto";
    std::string solver_cmd;
    std::string width = "1/1000";
    unsigned precision = 64;

    PPDA original;
    PPDA ppda; // normalized
    std::map<std::string, std::string> renaming;
    AutomataFile automata;
    Oracle oracle;

    CliContext() : oracle(SolverOptions{}) {}

    void load() {
        original = parse_ppda(slurp(system_path));
        auto rep = validate(original);
        if (!rep.ok()) {
            std::string msg = "system fails validation:";
            for (const auto& issue : rep.issues) msg += "\n  " + issue.message;
            throw std::runtime_error(msg);
        }
        NormalizeResult nr = normalize(original);
        ppda = std::move(nr.ppda);
        renaming = std::move(nr.renaming);
        if (!automata_path.empty()) {
            automata = parse_automata_file(original, slurp(automata_path));
            // valuations are parsed over the user alphabet; fresh symbols
            // from normalization reject by default
            for (auto& [name, aut] : automata.automata)
                aut = extend_alphabet(aut, ppda.symbol_count());
            extend_heads();
        }
        SolverOptions opts;
        opts.precision_bits = precision;
        opts.solver_cmd = solver_cmd;
        if (backend == "intervals") opts.backend = Backend::Intervals;
        else if (backend == "external") opts.backend = Backend::External;
        else opts.backend = Backend::Auto;
        oracle.opts = opts;
    }

    void extend_heads() {
        // observers/mullers read heads; fresh symbols only appear inside
        // normalization chains, mapped to the origin rule's head
        int heads_new = ppda.state_count() * ppda.symbol_count();
        auto extend = [&](std::vector<std::vector<int>>& step, int self_ok) {
            (void)self_ok;
            for (auto& row : step) {
                std::vector<int> wide(heads_new, -1);
                for (int p = 0; p < original.state_count(); ++p) {
                    for (int x = 0; x < original.symbol_count(); ++x) {
                        wide[p * ppda.symbol_count() + x] = row[p * original.symbol_count() + x];
                    }
                }
                // fresh heads: observation state unchanged
                for (int h = 0; h < heads_new; ++h) {
                    if (wide[h] < 0) wide[h] = -2; // fill below per-state
                }
                row = std::move(wide);
            }
        };
        for (auto& [name, obs] : automata.observers) {
            extend(obs.step, 0);
            for (size_t a = 0; a < obs.step.size(); ++a) {
                for (auto& v : obs.step[a]) {
                    if (v == -2) v = static_cast<int>(a);
                }
            }
        }
        for (auto& [name, mul] : automata.mullers) {
            extend(mul.step, 0);
            for (size_t b = 0; b < mul.step.size(); ++b) {
                for (auto& v : mul.step[b]) {
                    if (v == -2) v = static_cast<int>(b);
                }
            }
        }
    }

    SimpleSet resolve_set(const std::string& expr, const PPDA& sys) {
        return parse_simple_set(sys, expr);
    }

    json provenance() const {
        return json{{"backend", backend},
                    {"oracle_calls", oracle.decide_calls},
                    {"external_calls", oracle.external_calls},
                    {"precision_bits", precision}};
    }
};

void emit(const json& doc, const std::string& human) {
    std::cout << doc.dump(2) << std::endl;
    if (!human.empty()) std::cerr << human << std::endl;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic pushdown model checker"};
    app.require_subcommand(1);

    CliContext ctx;
    app.add_option("--system,-s", ctx.system_path, "system description file")->required();
    app.add_option("--automata,-a", ctx.automata_path, "automata/valuation file");
    app.add_option("--backend", ctx.backend, "auto|intervals|external")
        ->check(CLI::IsMember({"auto", "intervals", "external"}));
    app.add_option("--solver-cmd", ctx.solver_cmd,
                   "external SMT command; {} is replaced by the script path");
    app.add_option("--width", ctx.width, "target interval width a/b");
    app.add_option("--precision", ctx.precision, "dyadic rounding bits");

    // validate
    auto* c_validate = app.add_subcommand("validate", "check probability sums per head");

    // until
    std::string opt_c1 = "all", opt_c2, opt_config, opt_compare;
    auto* c_until = app.add_subcommand("until", "certified bracket for P(config, C1 U C2)");
    c_until->add_option("--c1", opt_c1, "C1 set expression or automaton name");
    c_until->add_option("--c2", opt_c2, "C2 set expression or automaton name")->required();
    c_until->add_option("--config", opt_config, "start configuration")->required();
    c_until->add_option("--compare", opt_compare, "optional threshold 'rel a/b'");

    // irun
    std::string opt_head;
    auto* c_irun = app.add_subcommand("irun", "P(IRun(head)) bracket");
    c_irun->add_option("--head", opt_head, "head pX")->required();

    // pctl
    std::string opt_formula;
    auto* c_pctl = app.add_subcommand("pctl", "qualitative PCTL model checking");
    c_pctl->add_option("--formula", opt_formula, "PCTL formula")->required();
    c_pctl->add_option("--config", opt_config, "configuration to test");

    // pctl-approx
    std::string opt_lambda = "1/10";
    auto* c_approx = app.add_subcommand("pctl-approx", "error-tolerant PCTL for pBPA");
    c_approx->add_option("--formula", opt_formula, "PCTL formula")->required();
    c_approx->add_option("--config", opt_config, "configuration to test")->required();
    c_approx->add_option("--lambda", opt_lambda, "error tolerance a/b");

    // omega
    std::string opt_observer, opt_muller, opt_threshold, opt_emit_smt;
    auto* c_omega = app.add_subcommand("omega", "omega-regular acceptance probability");
    c_omega->add_option("--observer", opt_observer, "observing automaton name");
    c_omega->add_option("--muller", opt_muller, "Muller automaton name");
    c_omega->add_option("--head", opt_head, "initial head pX")->required();
    c_omega->add_option("--threshold", opt_threshold, "optional 'rel a/b' decision");
    c_omega->add_option("--emit-smt", opt_emit_smt, "write the combined script here");

    // chain
    auto* c_chain = app.add_subcommand("chain", "dump the minima Markov chain");
    c_chain->add_option("--observer", opt_observer, "observing automaton name")->required();

    // export-smt
    std::string opt_query;
    auto* c_export = app.add_subcommand("export-smt", "emit the decision script for a query");
    c_export->add_option("--c1", opt_c1, "C1 set expression");
    c_export->add_option("--c2", opt_c2, "C2 set expression")->required();
    c_export->add_option("--query", opt_query, "'<var> rel a/b', var like I.eps / p.X.q / p.X.*")
        ->required();
    c_export->add_option("--out", opt_emit_smt, "output path (default stdout)");

    // simulate
    long opt_runs = 10000, opt_horizon = 1000;
    uint64_t opt_seed = 1;
    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo estimates");
    c_sim->add_option("--config", opt_config, "start configuration");
    c_sim->add_option("--c1", opt_c1, "C1 for until estimation");
    c_sim->add_option("--c2", opt_c2, "C2 for until estimation");
    c_sim->add_option("--observer", opt_observer, "observer for acceptance estimation");
    c_sim->add_option("--head", opt_head, "start head for acceptance estimation");
    c_sim->add_option("--runs", opt_runs, "number of runs");
    c_sim->add_option("--horizon", opt_horizon, "step bound per run");
    c_sim->add_option("--seed", opt_seed, "PRNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        ctx.load();
    } catch (const ParseError& e) {
        json doc{{"ok", false},
                 {"error", e.what()},
                 {"line", e.line},
                 {"column", e.column}};
        std::cout << doc.dump(2) << std::endl;
        return 1;
    } catch (const std::exception& e) {
        json doc{{"ok", false}, {"error", e.what()}};
        std::cout << doc.dump(2) << std::endl;
        return 1;
    }

    auto width = parse_rational(ctx.width);
    if (!width || !(*width > 0)) {
        std::cout << json{{"ok", false}, {"error", "bad --width"}}.dump(2) << std::endl;
        return 1;
    }

    try {
        json result;
        std::string human;

        if (*c_validate) {
            auto rep = validate(ctx.original);
            result["command"] = "validate";
            result["ok"] = true;
            result["valid"] = rep.ok();
            json issues = json::array();
            for (const auto& i : rep.issues)
                issues.push_back({{"head", ctx.original.head_name(i.head)}, {"sum", rat(i.sum)}});
            result["issues"] = issues;
            result["pbpa"] = ctx.original.pbpa_capable();
            human = rep.ok() ? "valid" : "invalid";
            emit(result, human);
            return 0;
        }

        if (*c_until) {
            SimpleSet c1 = ctx.resolve_set(opt_c1, ctx.ppda);
            SimpleSet c2 = ctx.resolve_set(opt_c2, ctx.ppda);
            Configuration cfg = parse_configuration(ctx.ppda, opt_config);
            result["command"] = "until";
            result["ok"] = true;
            IntervalResult r = until_probability(ctx.ppda, c1, c2, cfg, *width, ctx.oracle.opts);
            result["interval"] = interval_json(r.value);
            result["width_met"] = r.width_met;
            result["iterations"] = r.iterations;
            if (!opt_compare.empty()) {
                std::istringstream in(opt_compare);
                std::string rel_s, bound_s;
                in >> rel_s >> bound_s;
                auto rel = rel_from_string(rel_s);
                auto bound = parse_rational(bound_s);
                if (!rel || !bound) throw std::runtime_error("bad --compare");
                OracleAnswer ans = compare_until(ctx.ppda, c1, c2, cfg, *rel, *bound, ctx.oracle);
                result["verdict"] = verdict_str(ans.verdict);
                result["method"] = ans.method;
                if (ans.evidence) result["evidence"] = interval_json(*ans.evidence);
            }
            result["provenance"] = ctx.provenance();
            human = "P in [" + rat(r.value.lo) + ", " + rat(r.value.hi) + "]";
            emit(result, human);
            return 0;
        }

        if (*c_irun) {
            Head h = parse_head(ctx.ppda, opt_head);
            IntervalResult r = irun_probability(ctx.ppda, h, *width, ctx.oracle.opts);
            OracleAnswer pos = irun_positive(ctx.ppda, h, ctx.oracle);
            result["command"] = "irun";
            result["ok"] = true;
            result["interval"] = interval_json(r.value);
            result["width_met"] = r.width_met;
            result["positive"] = verdict_str(pos.verdict);
            result["provenance"] = ctx.provenance();
            human = "P(IRun) in [" + rat(r.value.lo) + ", " + rat(r.value.hi) + "]";
            emit(result, human);
            return 0;
        }

        if (*c_pctl) {
            FormulaPtr f = parse_formula(opt_formula);
            RegularValuation nu;
            for (const auto& [atom, aut_name] : ctx.automata.bindings) {
                auto it = ctx.automata.automata.find(aut_name);
                if (it == ctx.automata.automata.end())
                    throw std::runtime_error("binding " + atom + " -> unknown automaton " +
                                             aut_name);
                nu.atoms[atom] = it->second;
            }
            DeltaAutomaton sat = check_qualitative(ctx.ppda, f, nu, ctx.oracle);
            result["command"] = "pctl";
            result["ok"] = true;
            result["formula"] = formula_to_string(f);
            result["qualitative"] = is_qualitative(f);
            result["sat_automaton_states"] = sat.state_count();
            if (!opt_config.empty()) {
                Configuration cfg = parse_configuration(ctx.ppda, opt_config);
                bool sat_cfg = sat.accepts(cfg);
                result["config"] = opt_config;
                result["satisfied"] = sat_cfg;
                human = std::string(sat_cfg ? "satisfied" : "not satisfied");
            }
            result["provenance"] = ctx.provenance();
            emit(result, human);
            return 0;
        }

        if (*c_approx) {
            auto lambda = parse_rational(opt_lambda);
            if (!lambda || !(*lambda > 0 && *lambda < 1))
                throw std::runtime_error("bad --lambda (need 0 < lambda < 1)");
            FormulaPtr f = parse_formula(opt_formula);
            RegularValuation nu;
            for (const auto& [atom, aut_name] : ctx.automata.bindings) {
                nu.atoms[atom] = ctx.automata.automata.at(aut_name);
            }
            Configuration cfg = parse_configuration(ctx.ppda, opt_config);
            ToleranceVerdict v =
                check_error_tolerant(ctx.ppda, f, nu, cfg, *lambda, ctx.oracle);
            result["command"] = "pctl-approx";
            result["ok"] = true;
            result["formula"] = formula_to_string(f);
            result["lambda"] = rat(*lambda);
            result["answer"] = v.yes ? "YES" : "NO";
            result["provenance"] = ctx.provenance();
            human = v.yes ? "YES" : "NO";
            emit(result, human);
            return 0;
        }

        if (*c_omega || *c_chain) {
            if (!opt_observer.empty() || *c_chain) {
                auto it = ctx.automata.observers.find(opt_observer);
                if (it == ctx.automata.observers.end())
                    throw std::runtime_error("unknown observer " + opt_observer);
                const ObservingAutomaton& obs = it->second;
                if (*c_chain) {
                    MinChain chain = build_min_chain(ctx.ppda, obs, *width, ctx.oracle);
                    BsccClassification cls = bsccs(chain, obs);
                    result["command"] = "chain";
                    result["ok"] = true;
                    json states = json::array();
                    for (size_t s = 0; s < chain.states.size(); ++s) {
                        json edges = json::array();
                        for (const ChainEdge& e : chain.edges[s]) {
                            edges.push_back({{"to", chain.states[e.to].name(ctx.ppda, obs)},
                                             {"lo", rat(e.prob.lo)},
                                             {"hi", rat(e.prob.hi)},
                                             {"positive", e.positive}});
                        }
                        states.push_back({{"name", chain.states[s].name(ctx.ppda, obs)},
                                          {"edges", edges},
                                          {"bscc", cls.bscc_id[s]}});
                    }
                    result["states"] = states;
                    json comps = json::array();
                    for (size_t c = 0; c < cls.components.size(); ++c) {
                        json members = json::array();
                        for (int s : cls.components[c])
                            members.push_back(chain.states[s].name(ctx.ppda, obs));
                        comps.push_back({{"members", members}, {"accepting", bool(cls.accepting[c])}});
                    }
                    result["bsccs"] = comps;
                    result["provenance"] = ctx.provenance();
                    emit(result, "chain with " + std::to_string(chain.states.size()) + " states");
                    return 0;
                }
                Head h = parse_head(ctx.ppda, opt_head);
                AcceptanceResult r =
                    acceptance_probability(ctx.ppda, obs, h, *width, ctx.oracle);
                result["command"] = "omega";
                result["ok"] = true;
                result["interval"] = interval_json(r.value);
                result["width_met"] = r.width_met;
                json comps = json::array();
                for (size_t c = 0; c < r.classes.components.size(); ++c) {
                    json members = json::array();
                    for (int s : r.classes.components[c])
                        members.push_back(r.chain.states[s].name(ctx.ppda, obs));
                    comps.push_back({{"members", members}, {"accepting", bool(r.classes.accepting[c])}});
                }
                result["bsccs"] = comps;
                if (!opt_threshold.empty()) {
                    std::istringstream in(opt_threshold);
                    std::string rel_s, bound_s;
                    in >> rel_s >> bound_s;
                    auto rel = rel_from_string(rel_s);
                    auto bound = parse_rational(bound_s);
                    if (!rel || !bound) throw std::runtime_error("bad --threshold");
                    Verdict v = Verdict::Unknown;
                    switch (*rel) {
                        case Rel::Ge: v = r.value.lo >= *bound   ? Verdict::True
                                          : r.value.hi < *bound ? Verdict::False
                                                                : Verdict::Unknown;
                                      break;
                        case Rel::Gt: v = r.value.lo > *bound    ? Verdict::True
                                          : r.value.hi <= *bound ? Verdict::False
                                                                 : Verdict::Unknown;
                                      break;
                        case Rel::Le: v = r.value.hi <= *bound   ? Verdict::True
                                          : r.value.lo > *bound ? Verdict::False
                                                                : Verdict::Unknown;
                                      break;
                        case Rel::Lt: v = r.value.hi < *bound    ? Verdict::True
                                          : r.value.lo >= *bound ? Verdict::False
                                                                 : Verdict::Unknown;
                                      break;
                        case Rel::Eq:
                            v = (r.value.lo == *bound && r.value.hi == *bound) ? Verdict::True
                                : (*bound < r.value.lo || *bound > r.value.hi) ? Verdict::False
                                                                               : Verdict::Unknown;
                            break;
                    }
                    result["verdict"] = verdict_str(v);
                }
                if (!opt_emit_smt.empty()) {
                    std::ofstream out(opt_emit_smt);
                    out << export_acceptance_smt(ctx.ppda, obs, h, Rel::Ge, Rational(1, 2),
                                                 ctx.oracle);
                    result["smt_script"] = opt_emit_smt;
                }
                result["provenance"] = ctx.provenance();
                human = "P(Acc) in [" + rat(r.value.lo) + ", " + rat(r.value.hi) + "]";
                emit(result, human);
                return 0;
            }
            if (!opt_muller.empty()) {
                auto it = ctx.automata.mullers.find(opt_muller);
                if (it == ctx.automata.mullers.end())
                    throw std::runtime_error("unknown Muller automaton " + opt_muller);
                Head h = parse_head(ctx.ppda, opt_head);
                AcceptanceResult r =
                    muller_probability(ctx.ppda, it->second, h, *width, ctx.oracle);
                result["command"] = "omega";
                result["ok"] = true;
                result["interval"] = interval_json(r.value);
                result["width_met"] = r.width_met;
                result["provenance"] = ctx.provenance();
                human = "P(B) in [" + rat(r.value.lo) + ", " + rat(r.value.hi) + "]";
                emit(result, human);
                return 0;
            }
            throw std::runtime_error("omega needs --observer or --muller");
        }

        if (*c_export) {
            SimpleSet c1 = ctx.resolve_set(opt_c1, ctx.ppda);
            SimpleSet c2 = ctx.resolve_set(opt_c2, ctx.ppda);
            std::istringstream in(opt_query);
            std::string var_s, rel_s, bound_s;
            in >> var_s >> rel_s >> bound_s;
            auto rel = rel_from_string(rel_s);
            auto bound = parse_rational(bound_s);
            if (!rel || !bound) throw std::runtime_error("bad --query");
            DecisionQuery q;
            q.system = build_until_system(ctx.ppda, c1, c2);
            // var: I.eps / I.* for pBPA, p.X.q / p.X.* for pPDA
            auto last_dot = var_s.rfind('.');
            if (last_dot == std::string::npos) throw std::runtime_error("bad query variable");
            std::string head_part = var_s.substr(0, last_dot);
            std::string tail = var_s.substr(last_dot + 1);
            Head h = parse_head(ctx.ppda, head_part);
            VarId v;
            if (tail == "*") {
                v = VarId{VarId::Kind::Bullet, h, 0};
            } else if (tail == "eps" && ctx.ppda.pbpa_capable()) {
                v = VarId{VarId::Kind::PopTo, h, 0};
            } else {
                auto st = find_state(ctx.ppda, tail);
                if (!st) throw std::runtime_error("bad query variable target state");
                v = VarId{VarId::Kind::PopTo, h, *st};
            }
            if (auto idx = q.system.index_of(v)) {
                q.expr.add_term(Rational(1), {*idx});
            } else {
                q.expr.constant = q.system.pins.at(v);
            }
            q.rel = *rel;
            q.bound = *bound;
            q.label = var_s;
            std::string script = export_smt(q, ctx.ppda);
            result["command"] = "export-smt";
            result["ok"] = true;
            if (!opt_emit_smt.empty()) {
                std::ofstream out(opt_emit_smt);
                out << script;
                result["script_file"] = opt_emit_smt;
            } else {
                result["script"] = script;
            }
            if (ctx.oracle.opts.backend != Backend::Intervals) {
                OracleAnswer ans = ctx.oracle.decide(q, ctx.ppda);
                result["verdict"] = verdict_str(ans.verdict);
                result["method"] = ans.method;
            }
            result["provenance"] = ctx.provenance();
            emit(result, "");
            return 0;
        }

        if (*c_sim) {
            result["command"] = "simulate";
            result["ok"] = true;
            if (!opt_observer.empty()) {
                auto it = ctx.automata.observers.find(opt_observer);
                if (it == ctx.automata.observers.end())
                    throw std::runtime_error("unknown observer " + opt_observer);
                Head h = parse_head(ctx.ppda, opt_head);
                MinChain chain = build_min_chain(ctx.ppda, it->second, Rational(1, 8), ctx.oracle);
                BsccClassification cls = bsccs(chain, it->second);
                AcceptanceEstimate est = estimate_acceptance(ctx.ppda, it->second, h, opt_runs,
                                                             opt_horizon, opt_seed, chain, cls);
                result["estimate"] = rat(est.estimate);
                result["stderr_bound"] = rat(est.stderr_bound);
                result["undetermined"] = est.undetermined_count;
                result["runs"] = est.runs;
                human = "acceptance estimate " + rat(est.estimate);
            } else if (!opt_c2.empty()) {
                SimpleSet c1 = ctx.resolve_set(opt_c1, ctx.ppda);
                SimpleSet c2 = ctx.resolve_set(opt_c2, ctx.ppda);
                Configuration cfg = parse_configuration(ctx.ppda, opt_config);
                UntilEstimate est =
                    estimate_until(ctx.ppda, c1, c2, cfg, opt_runs, opt_horizon, opt_seed);
                result["estimate"] = rat(est.estimate);
                result["stderr_bound"] = rat(est.stderr_bound);
                result["truncated"] = est.truncation_count;
                result["runs"] = est.runs;
                human = "until estimate " + rat(est.estimate);
            } else {
                Configuration cfg = parse_configuration(ctx.ppda, opt_config);
                RunSample run = sample_run(ctx.ppda, cfg, opt_horizon, opt_seed);
                result["steps"] = run.steps.size();
                result["terminated"] = run.terminated;
                result["truncated"] = run.truncated;
                result["final"] = ctx.ppda.config_name(run.final_config);
                human = "run of " + std::to_string(run.steps.size()) + " steps";
            }
            result["seed"] = opt_seed;
            result["provenance"] = ctx.provenance();
            emit(result, human);
            return 0;
        }

        std::cout << json{{"ok", false}, {"error", "no command"}}.dump(2) << std::endl;
        return 1;
    } catch (const ParseError& e) {
        json doc{{"ok", false}, {"error", e.what()}, {"line", e.line}, {"column", e.column}};
        std::cout << doc.dump(2) << std::endl;
        return 1;
    } catch (const UndecidedPredicate& e) {
        json doc{{"ok", true}, {"verdict", "unknown"}, {"error", e.what()}};
        std::cout << doc.dump(2) << std::endl;
        return 0;
    } catch (const std::invalid_argument& e) {
        json doc{{"ok", false}, {"error", e.what()}};
        std::cout << doc.dump(2) << std::endl;
        return 1;
    } catch (const std::exception& e) {
        json doc{{"ok", false}, {"error", e.what()}};
        std::cout << doc.dump(2) << std::endl;
        return 2;
    }
}
