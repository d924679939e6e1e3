// lsm: command-line front end for generators, dynamics, reachability and
// centralized analyses. Results are key=value records on standard output.

#include <lsm/centralized.hpp>
#include <lsm/dynamics.hpp>
#include <lsm/gadgets.hpp>
#include <lsm/io.hpp>
#include <lsm/random_games.hpp>
#include <lsm/reachability.hpp>
#include <lsm/verify.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace
{
    using namespace lsm;

    constexpr const char * tool_version = "1.0.0";

    class UsageError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    using Fields = std::vector<std::pair<std::string, std::string>>;

    /// Plain mode: `kind key=value ...` per line. Pretty mode: an indented block per record.
    class Printer
    {
    public:
        explicit Printer(bool pretty) :
            _pretty(pretty)
        {
        }

        auto record(const std::string & kind, const Fields & fields) const -> void
        {
            if (_pretty) {
                std::size_t width = 0;
                for (auto & f : fields)
                    width = std::max(width, f.first.size());
                std::cout << kind << "\n";
                for (auto & [k, v] : fields)
                    std::cout << "  " << k << std::string(width - k.size(), ' ') << " : " << v << "\n";
                return;
            }
            std::cout << kind;
            for (auto & [k, v] : fields)
                std::cout << ' ' << k << '=' << quote(v);
            std::cout << "\n";
        }

    private:
        static auto quote(const std::string & v) -> std::string
        {
            if (! v.empty() && v.find_first_of(" \t\"") == std::string::npos)
                return v;
            std::string out = "\"";
            for (auto c : v) {
                if (c == '"' || c == '\\')
                    out += '\\';
                out += c;
            }
            return out + "\"";
        }

        bool _pretty;
    };

    /// Writes via fn to path, or to standard output for "-".
    template <typename Fn>
    auto write_to(const std::string & path, Fn && fn) -> void
    {
        if (path == "-") {
            fn(std::cout);
            return;
        }
        std::ofstream out(path);
        if (! out)
            throw GameError("cannot write '" + path + "'");
        fn(out);
    }

    auto load_game(const std::string & path) -> Game { return Game(read_game_file(path)); }

    auto memory_model(const std::string & kind, const std::string & scope) -> MemoryModel
    {
        MemoryModel m;
        m.kind = parse_memory_kind(kind);
        if (scope == "U")
            m.scope = MemoryScope::side(Side::U);
        else if (scope == "W")
            m.scope = MemoryScope::side(Side::W);
        else
            m.scope = MemoryScope::all();
        return m;
    }

    auto count(std::uint64_t x) -> std::string { return std::to_string(x); }

    struct GenArgs
    {
        std::string gadget, out = "-", cnf, game, anchor;
        int n = 1, u = 3, w = 3;
        std::uint64_t seed = default_seed;
        bool complete_e = false, correlated = false;
    };

    auto run_gen(const GenArgs & a, const Printer & print) -> int
    {
        NetworkGame g;
        if (a.gadget == "circling")
            g = circling_gadget();
        else if (a.gadget == "quality-reset")
            g = quality_reset_gadget();
        else if (a.gadget == "recency-w-only")
            g = recency_w_only_gadget();
        else if (a.gadget == "exponential")
            g = exponential_gadget(a.n);
        else if (a.gadget == "polytope-example")
            g = polytope_example_game();
        else if (a.gadget == "roommates-cycle")
            g = roommates_cycle_game();
        else if (a.gadget == "threesat") {
            if (a.cnf.empty())
                throw UsageError("gen threesat needs --cnf");
            g = threesat_gadget(read_cnf_file(a.cnf));
        }
        else if (a.gadget == "attach-circling") {
            if (a.game.empty() || a.anchor.empty())
                throw UsageError("gen attach-circling needs -g and --anchor");
            g = attach_circling(read_game_file(a.game), a.anchor);
        }
        else if (a.gadget == "random") {
            std::mt19937_64 rng(a.seed);
            RandomGameOptions o;
            o.u = a.u;
            o.w = a.w;
            o.correlated = a.correlated;
            g = random_game(rng, o);
        }
        if (a.complete_e)
            g = complete_potential_edges(std::move(g));
        Game checked(g);
        write_to(a.out, [&](std::ostream & out) { write_game(out, g); });
        if (a.out != "-")
            print.record("gen", {{"gadget", a.gadget}, {"file", a.out}, {"vertices", count(checked.size())}, {"links", count(checked.links().size())},
                                    {"edges", count(checked.edges().size())}});
        return 0;
    }

    struct DynamicsArgs
    {
        std::string game, memory = "none", scope = "all", init = "empty", trace, replay_file;
        std::uint64_t seed = default_seed, max_steps = default_max_steps;
        bool two_phase = false;
    };

    auto run_dynamics(const DynamicsArgs & a, const Printer & print) -> int
    {
        auto g = load_game(a.game);
        auto init = read_matching_file(g, a.init);
        auto model = memory_model(a.memory, a.scope);
        RunOutcome out;
        std::string mode = "random";
        if (! a.replay_file.empty()) {
            mode = "replay";
            auto in = detail::open_input(a.replay_file);
            out = replay(g, read_trace(g, in), model);
        }
        else if (a.two_phase) {
            mode = "two-phase";
            if (model.kind != MemoryKind::Recency)
                throw UsageError("--two-phase needs -m recency");
            auto seq = two_phase_recency_sequence(g, init, model.scope);
            out = replay(g, seq, model);
        }
        else
            out = run_random(g, init, model, a.seed, a.max_steps, ! a.trace.empty());
        if (! a.trace.empty() && out.trace)
            write_to(a.trace, [&](std::ostream & o) { write_trace(o, g, *out.trace); });
        print.record("dynamics", {{"mode", mode}, {"memory", std::string(memory_kind_name(model.kind))}, {"scope", model.scope.describe()}, {"seed", count(a.seed)},
                                     {"converged", out.converged ? "true" : "false"}, {"steps", count(out.steps_taken)},
                                     {"matching", matching_to_string(g, out.final.matching())}});
        return 0;
    }

    struct ReachArgs
    {
        std::string game, init = "empty", target, memory = "none", scope = "all", witness;
        std::uint64_t node_limit = 10'000'000;
        bool no_reduce = false;
    };

    auto run_reach(const ReachArgs & a, const Printer & print) -> int
    {
        auto g = load_game(a.game);
        SearchConfig cfg;
        cfg.memory = memory_model(a.memory, a.scope);
        if (cfg.memory.kind == MemoryKind::Random)
            throw UsageError("exact search does not support random memory");
        if (a.node_limit == 0)
            throw UsageError("--node-limit must be positive");
        cfg.node_limit = a.node_limit;
        cfg.reduce = ! a.no_reduce;
        auto init = read_matching_file(g, a.init);
        auto answer = a.target.empty() ? decide_reach_any(g, init, cfg) : decide_reach_target(g, init, read_matching_file(g, a.target), cfg);
        Fields f{{"result", std::string(verdict_name(answer.verdict))}, {"explored", count(answer.explored)}};
        if (answer.shortest_length)
            f.emplace_back("shortest_length", count(*answer.shortest_length));
        if (answer.reached)
            f.emplace_back("reached", matching_to_string(g, *answer.reached));
        if (answer.exhausted)
            f.emplace_back("node_limit", count(a.node_limit));
        print.record("reach", f);
        if (answer.witness && ! a.witness.empty())
            write_to(a.witness, [&](std::ostream & o) { write_trace(o, g, *answer.witness); });
        return answer.verdict == Verdict::Undetermined ? 3 : 0;
    }

    auto run_enumerate(const std::string & path, std::uint64_t limit, const Printer & print) -> int
    {
        auto g = load_game(path);
        auto all = enumerate_lsm(g, limit);
        for (std::size_t i = 0; i < all.size(); ++i)
            print.record("matching", {{"index", count(i + 1)}, {"size", count(all[i].size())}, {"edges", matching_to_string(g, all[i])}});
        print.record("enumerate", {{"count", count(all.size())}});
        return 0;
    }

    auto run_lp(const std::string & path, const std::string & out, const std::string & check, const Printer & print) -> int
    {
        auto g = load_game(path);
        auto lp = emit_lp(g);
        if (check.empty()) {
            write_to(out, [&](std::ostream & o) { write_lp(o, lp); });
            if (out != "-")
                print.record("lp", {{"file", out}, {"variables", count(lp.variables.size())}, {"constraints", count(lp.constraints.size())}});
            return 0;
        }
        auto in = detail::open_input(check);
        auto violation = first_violation(lp, read_point(in));
        Fields f{{"result", violation ? "infeasible" : "feasible"}};
        if (violation)
            f.emplace_back("violated", *violation);
        print.record("lp", f);
        return 0;
    }

    auto run_maxmatch(const std::string & path, bool approx, std::uint64_t limit, const Printer & print) -> int
    {
        auto g = load_game(path);
        if (approx) {
            auto m = stable_matching_bipartite(g);
            print.record("maxmatch", {{"method", "deferred-acceptance"}, {"size", count(m.size())}, {"globally_stable", is_globally_stable(g, m) ? "true" : "false"},
                                         {"matching", matching_to_string(g, m)}});
            return 0;
        }
        auto m = max_lsm(g, limit);
        if (! m)
            print.record("maxmatch", {{"method", "exhaustive"}, {"result", "no-lsm"}});
        else
            print.record("maxmatch", {{"method", "exhaustive"}, {"size", count(m->size())}, {"matching", matching_to_string(g, *m)}});
        return 0;
    }

    struct ReduceArgs
    {
        std::string kind, input, out = "-", init_out, target_out;
    };

    auto run_reduce(const ReduceArgs & a, const Printer & print) -> int
    {
        Fields f{{"reduction", a.kind}};
        auto derived = [&](const std::string & given, const std::string & suffix) { return ! given.empty() ? given : a.out == "-" ? std::string() : a.out + suffix; };
        auto write_matching_file = [&](const std::string & path, const Game & g, const std::vector<std::pair<std::string, std::string>> & pairs, const std::string & key) {
            if (path.empty())
                return;
            write_to(path, [&](std::ostream & o) { write_matching(o, g, matching_from_ids(g, pairs)); });
            f.emplace_back(key, path);
        };
        if (a.kind == "rev-is") {
            auto wg = game_to_weighted_is(load_game(a.input));
            write_to(a.out, [&](std::ostream & o) { write_weighted_graph(o, wg); });
            f.emplace_back("vertices", count(wg.size()));
            f.emplace_back("edges", count(wg.edges.size()));
        }
        else {
            NetworkGame spec;
            std::optional<ReductionOutput> red;
            if (a.kind == "thm9")
                spec = is_to_jobmarket(read_weighted_graph_file(a.input));
            else {
                auto cnf = read_cnf_file(a.input);
                if (a.kind == "thm1")
                    red = reduction_thm1(cnf);
                else if (a.kind == "cor2")
                    red = reduction_cor2(cnf);
                else if (a.kind == "thm3")
                    red = reduction_thm3(cnf);
                else
                    spec = roommates_existence_reduction(cnf);
                if (red)
                    spec = red->game;
            }
            Game g(spec);
            write_to(a.out, [&](std::ostream & o) { write_game(o, spec); });
            f.emplace_back("vertices", count(g.size()));
            f.emplace_back("edges", count(g.edges().size()));
            if (red) {
                write_matching_file(derived(a.init_out, ".init"), g, red->init, "init");
                if (red->target)
                    write_matching_file(derived(a.target_out, ".target"), g, *red->target, "target");
            }
        }
        if (a.out != "-") {
            f.emplace_back("file", a.out);
            print.record("reduce", f);
        }
        return 0;
    }

    auto run_verify(const std::string & suite, const Printer & print) -> int
    {
        std::vector<int> ids;
        try {
            ids = parse_suite(suite);
        }
        catch (const GameError & e) {
            throw UsageError(e.what());
        }
        int failed = 0;
        for (auto id : ids) {
            auto r = run_check(id);
            failed += ! r.passed;
            std::ostringstream secs;
            secs.setf(std::ios::fixed);
            secs.precision(2);
            secs << r.seconds;
            print.record("check", {{"id", count(r.id)}, {"name", r.name}, {"status", r.passed ? "pass" : "fail"}, {"seconds", secs.str()}, {"detail", r.detail}});
        }
        print.record("verify", {{"passed", count(ids.size() - failed)}, {"failed", count(failed)}});
        return failed == 0 ? 0 : 1;
    }
}

int main(int argc, char ** argv)
{
    CLI::App app{"Locally stable matchings in network matching games"};
    app.set_version_flag("--version", std::string("lsm ") + tool_version + " (" + std::string(format_version) + ")");
    app.require_subcommand(1, 1);
    bool pretty = false;
    app.add_flag("--pretty", pretty, "Human-readable output");

    GenArgs gen;
    auto * gen_cmd = app.add_subcommand("gen", "Generate a gadget as a game file");
    gen_cmd->add_option("gadget", gen.gadget, "Gadget name")
        ->required()
        ->check(CLI::IsMember({"circling", "quality-reset", "recency-w-only", "exponential", "threesat", "attach-circling", "polytope-example", "roommates-cycle", "random"}));
    gen_cmd->add_option("-n", gen.n, "Number of rotating gadgets (exponential)")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--cnf", gen.cnf, "DIMACS formula (threesat)");
    gen_cmd->add_option("-g,--game", gen.game, "Host game (attach-circling)");
    gen_cmd->add_option("--anchor", gen.anchor, "Anchor vertex (attach-circling)");
    gen_cmd->add_option("--seed", gen.seed, "Seed (random)");
    gen_cmd->add_option("--u", gen.u, "Size of U (random)")->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--w", gen.w, "Size of W, 0 for an unpartitioned game (random)")->check(CLI::NonNegativeNumber);
    gen_cmd->add_flag("--correlated", gen.correlated, "Edge weights instead of rankings (random)");
    gen_cmd->add_flag("--complete-e", gen.complete_e, "Allow every U-W pair, extra options ranked last");
    gen_cmd->add_option("-o,--output", gen.out, "Output file, - for standard output");

    DynamicsArgs dyn;
    auto * dyn_cmd = app.add_subcommand("dynamics", "Run random improvement dynamics, replay a trace, or build the two-phase recency schedule");
    dyn_cmd->add_option("-g,--game", dyn.game, "Game file, - for standard input")->required();
    dyn_cmd->add_option("-m,--memory", dyn.memory, "Memory model")->check(CLI::IsMember({"none", "random", "recency", "quality"}));
    dyn_cmd->add_option("--scope", dyn.scope, "Vertices with memory")->check(CLI::IsMember({"U", "W", "all"}));
    dyn_cmd->add_option("--seed", dyn.seed, "Seed");
    dyn_cmd->add_option("--max-steps", dyn.max_steps, "Step limit");
    dyn_cmd->add_option("--init", dyn.init, "Initial matching file, or 'empty'");
    dyn_cmd->add_option("--trace", dyn.trace, "Write the executed sequence here");
    auto * replay_opt = dyn_cmd->add_option("--replay", dyn.replay_file, "Replay this trace instead of running");
    dyn_cmd->add_flag("--two-phase", dyn.two_phase, "Build the two-phase recency schedule")->excludes(replay_opt);

    ReachArgs reach;
    auto * reach_cmd = app.add_subcommand("reach", "Exact reachability of a locally stable state");
    reach_cmd->add_option("-g,--game", reach.game, "Game file, - for standard input")->required();
    reach_cmd->add_option("--init", reach.init, "Initial matching file, or 'empty'");
    reach_cmd->add_option("--target", reach.target, "Target matching file (default: any locally stable state)");
    reach_cmd->add_option("-m,--memory", reach.memory, "Memory model")->check(CLI::IsMember({"none", "random", "recency", "quality"}));
    reach_cmd->add_option("--scope", reach.scope, "Vertices with memory")->check(CLI::IsMember({"U", "W", "all"}));
    reach_cmd->add_option("--node-limit", reach.node_limit, "State limit");
    reach_cmd->add_option("--witness", reach.witness, "Write a shortest witness trace here");
    reach_cmd->add_flag("--no-reduce", reach.no_reduce, "Plain breadth-first search without stubborn subsets");

    std::string enum_game;
    std::uint64_t enum_limit = 50'000'000;
    auto * enum_cmd = app.add_subcommand("enumerate", "List all locally stable matchings");
    enum_cmd->add_option("-g,--game", enum_game, "Game file, - for standard input")->required();
    enum_cmd->add_option("--node-limit", enum_limit, "Search node limit");

    std::string lp_game, lp_out = "-", lp_check;
    auto * lp_cmd = app.add_subcommand("lp", "Emit the linear system or check a point against it");
    lp_cmd->add_option("-g,--game", lp_game, "Game file, - for standard input")->required();
    lp_cmd->add_option("-o,--output", lp_out, "LP output file");
    lp_cmd->add_option("--check", lp_check, "Point file of `<variable> <value>` lines");

    std::string mm_game;
    bool mm_approx = false;
    std::uint64_t mm_limit = 50'000'000;
    auto * mm_cmd = app.add_subcommand("maxmatch", "Maximum locally stable matching, or the deferred-acceptance 2-approximation");
    mm_cmd->add_option("-g,--game", mm_game, "Game file, - for standard input")->required();
    mm_cmd->add_flag("--approx", mm_approx, "Globally stable matching by deferred acceptance");
    mm_cmd->add_option("--node-limit", mm_limit, "Search node limit");

    ReduceArgs red;
    auto * red_cmd = app.add_subcommand("reduce", "Apply a reduction to a formula, graph or game");
    red_cmd->add_option("kind", red.kind, "Reduction")->required()->check(CLI::IsMember({"thm1", "cor2", "thm3", "thm9", "rev-is", "roommates"}));
    red_cmd->add_option("input", red.input, "DIMACS formula, weighted graph (thm9) or game (rev-is)")->required();
    red_cmd->add_option("-o,--output", red.out, "Output file");
    red_cmd->add_option("--init-out", red.init_out, "Initial matching file (default <output>.init)");
    red_cmd->add_option("--target-out", red.target_out, "Target matching file (default <output>.target)");

    std::string suite = "all";
    auto * verify_cmd = app.add_subcommand("verify", "Run the fixture checks");
    verify_cmd->add_option("suite", suite, "all, a check number 1-13, or a check name");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError & e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    Printer print(pretty);
    try {
        if (*gen_cmd)
            return run_gen(gen, print);
        if (*dyn_cmd)
            return run_dynamics(dyn, print);
        if (*reach_cmd)
            return run_reach(reach, print);
        if (*enum_cmd)
            return run_enumerate(enum_game, enum_limit, print);
        if (*lp_cmd)
            return run_lp(lp_game, lp_out, lp_check, print);
        if (*mm_cmd)
            return run_maxmatch(mm_game, mm_approx, mm_limit, print);
        if (*red_cmd)
            return run_reduce(red, print);
        if (*verify_cmd)
            return run_verify(suite, print);
    }
    catch (const UsageError & e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    catch (const GuardError & e) {
        print.record("error", {{"result", "undetermined"}, {"reason", e.what()}});
        return 3;
    }
    catch (const std::exception & e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
