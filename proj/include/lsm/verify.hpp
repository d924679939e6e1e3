#pragma once

// The thirteen fixture checks run by the acceptance binary and `lsm verify`.

#include <lsm/centralized.hpp>
#include <lsm/dynamics.hpp>
#include <lsm/gadgets.hpp>
#include <lsm/random_games.hpp>
#include <lsm/reachability.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lsm
{
    struct CheckResult
    {
        int id = 0;
        std::string name;
        bool passed = false;
        std::string detail;
        double seconds = 0;
    };

    namespace detail
    {
        class Stopwatch
        {
        public:
            auto seconds() const -> double { return std::chrono::duration<double>(std::chrono::steady_clock::now() - _start).count(); }

        private:
            std::chrono::steady_clock::time_point _start = std::chrono::steady_clock::now();
        };

        inline auto sat_formula() -> CnfFormula { return {1, {{1, 1, 1}}}; }
        inline auto unsat_formula() -> CnfFormula { return {1, {{1, 1, 1}, {-1, -1, -1}}}; }

        inline auto describe(const ReachAnswer & a) -> std::string
        {
            std::string s(verdict_name(a.verdict));
            if (a.shortest_length)
                s += "(" + std::to_string(*a.shortest_length) + ")";
            return s + "/" + std::to_string(a.explored);
        }

        /// Witness replays to a state satisfying goal.
        inline auto witness_ok(const Game & g, const ReachAnswer & a, const MemoryModel & memory, const std::function<bool(const DynamicsState &)> & goal) -> bool
        {
            if (! a.witness)
                return false;
            try {
                auto r = replay(g, *a.witness, memory);
                return goal(r.final) && r.steps_taken == a.shortest_length.value_or(r.steps_taken);
            }
            catch (const StepError &) {
                return false;
            }
        }

        inline auto check_circling() -> CheckResult
        {
            Stopwatch clock;
            CheckResult r{1, "circling-gadget", false, "", 0};
            Game g(circling_gadget());
            auto lsms = enumerate_lsm(g);
            std::vector<Matching> expected{matching_from_ids(g, {{"1", "B"}, {"2", "C"}, {"3", "D"}, {"4", "A"}}),
                matching_from_ids(g, {{"1", "C"}, {"2", "D"}, {"3", "A"}, {"4", "B"}})};
            std::sort(expected.begin(), expected.end());
            auto reach = decide_reach_any(g, {});
            auto secs = clock.seconds();
            r.passed = lsms == expected && reach.verdict == Verdict::Unreachable && secs < 1.0;
            r.detail = "lsm_count=" + std::to_string(lsms.size()) + " reach=" + describe(reach);
            return r;
        }

        inline auto check_target_reduction(int id, const std::string & name, ReductionOutput (*make)(const CnfFormula &), bool job_market) -> CheckResult
        {
            CheckResult r{id, name, true, "", 0};
            for (auto sat : {true, false}) {
                Stopwatch clock;
                auto red = make(sat ? sat_formula() : unsat_formula());
                Game g(red.game);
                auto init = matching_from_ids(g, red.init);
                auto target = matching_from_ids(g, *red.target);
                auto a = decide_reach_target(g, init, target);
                auto secs = clock.seconds();
                bool ok = a.verdict == (sat ? Verdict::Reachable : Verdict::Unreachable) && secs < 60.0;
                if (ok && sat)
                    ok = witness_ok(g, a, {}, [&](const DynamicsState & s) { return s.matching() == target; });
                r.passed = r.passed && ok;
                r.detail += std::string(sat ? "sat=" : " unsat=") + describe(a);
            }
            if (job_market) {
                Game g(make(unsat_formula()).game);
                bool isolated = g.has_partition();
                for (auto & l : g.links())
                    isolated = isolated && g.side(l.a) != Side::U && g.side(l.b) != Side::U;
                r.passed = r.passed && isolated;
                r.detail += std::string(" u_isolated=") + (isolated ? "yes" : "no");
            }
            return r;
        }

        inline auto check_thm3() -> CheckResult
        {
            CheckResult r{4, "reach-any-general", true, "", 0};
            for (auto sat : {true, false}) {
                auto f = sat ? sat_formula() : unsat_formula();
                auto red = reduction_thm3(f);
                Game g(red.game);
                std::size_t core = 0;
                for (auto & v : red.game.vertices)
                    if (red.game.roles[v.id].rfind("circling", 0) != 0)
                        ++core;
                auto anchors = static_cast<std::size_t>(f.num_vars + f.num_clauses());
                bool sizes = static_cast<std::size_t>(g.size()) == core + 11 * anchors;
                auto a = decide_reach_any(g, {});
                bool ok = sizes && a.verdict == (sat ? Verdict::Reachable : Verdict::Unreachable);
                if (ok && sat)
                    ok = witness_ok(g, a, {}, [&](const DynamicsState & s) { return is_locally_stable(g, s); });
                r.passed = r.passed && ok;
                r.detail += std::string(sat ? "sat=" : " unsat=") + describe(a) + " |V|=" + std::to_string(g.size());
            }
            return r;
        }

        inline auto check_two_phase() -> CheckResult
        {
            CheckResult r{5, "two-phase-recency", true, "", 0};
            std::mt19937_64 rng(5);
            std::size_t bad_stable = 0, bad_bound = 0, bad_round = 0, longest = 0;
            for (int trial = 0; trial < 1000; ++trial) {
                RandomGameOptions o;
                o.u = std::uniform_int_distribution<int>(1, 5)(rng);
                o.w = std::uniform_int_distribution<int>(1, 5)(rng);
                o.links_inside_u = false;
                o.link_p = 0.35;
                o.edge_p = 0.7;
                Game g(random_game(rng, o));
                auto init = random_matching(rng, g);
                auto round_ok = [&](RecencyPhase phase, const DynamicsState & before, const DynamicsState & after) {
                    if (phase != RecencyPhase::MemoryRound)
                        return;
                    bool better = false;
                    for (VertexIndex w = 0; w < g.size(); ++w) {
                        if (g.side(w) != Side::W)
                            continue;
                        auto was = g.rank(w, before.mate[w]), now = g.rank(w, after.mate[w]);
                        if (now < was)
                            ++bad_round;
                        better = better || now > was;
                    }
                    if (! better)
                        ++bad_round;
                };
                auto seq = two_phase_recency_sequence(g, init, MemoryScope::side(Side::U), round_ok);
                auto out = replay(g, seq, {MemoryKind::Recency, MemoryScope::side(Side::U)});
                if (! out.converged)
                    ++bad_stable;
                if (seq.steps.size() > two_phase_bound(o.u, o.w))
                    ++bad_bound;
                longest = std::max(longest, seq.steps.size());
            }
            r.passed = bad_stable == 0 && bad_bound == 0 && bad_round == 0;
            r.detail = "games=1000 not_stable=" + std::to_string(bad_stable) + " over_bound=" + std::to_string(bad_bound)
                + " round_violations=" + std::to_string(bad_round) + " longest=" + std::to_string(longest);
            return r;
        }

        inline auto check_memory_defeat() -> CheckResult
        {
            CheckResult r{6, "memory-defeat", false, "", 0};
            Game q(quality_reset_gadget());
            int converged = 0;
            for (std::uint64_t seed = 1; seed <= 100; ++seed)
                converged += run_random(q, {}, {MemoryKind::Quality}, seed, 100'000).converged;
            Game w(recency_w_only_gadget());
            SearchConfig cfg;
            cfg.memory = {MemoryKind::Recency, MemoryScope::side(Side::W)};
            auto a = decide_reach_any(w, {}, cfg);
            r.passed = converged == 0 && a.verdict == Verdict::Unreachable;
            r.detail = "quality_runs_converged=" + std::to_string(converged) + "/100 (statistical) w_only_reach=" + describe(a);
            return r;
        }

        inline auto check_random_memory() -> CheckResult
        {
            CheckResult r{7, "random-memory", false, "", 0};
            Game g(circling_gadget());
            int converged = 0;
            for (std::uint64_t seed = 1; seed <= 100; ++seed)
                converged += run_random(g, {}, {MemoryKind::Random}, seed, 10'000).converged;
            r.passed = converged >= 95;
            r.detail = "converged=" + std::to_string(converged) + "/100";
            return r;
        }

        inline auto check_exponential() -> CheckResult
        {
            CheckResult r{8, "exponential-growth", true, "", 0};
            std::vector<std::uint64_t> lengths;
            for (int n = 1; n <= 3; ++n) {
                Game g(exponential_gadget(n));
                auto a = decide_reach_any(g, {});
                r.detail += (n > 1 ? " n" : "n") + std::to_string(n) + "=" + describe(a);
                if (a.exhausted) {
                    r.detail += " exhausted";
                    r.passed = r.passed && n == 3;
                    break;
                }
                if (! a.shortest_length || ! witness_ok(g, a, {}, [&](const DynamicsState & s) { return is_locally_stable(g, s); })) {
                    r.passed = false;
                    break;
                }
                lengths.push_back(*a.shortest_length);
            }
            for (std::size_t i = 1; i < lengths.size(); ++i) {
                auto ratio = static_cast<double>(lengths[i]) / static_cast<double>(lengths[i - 1]);
                std::ostringstream s;
                s.precision(3);
                s << " ratio" << i << "=" << ratio;
                r.detail += s.str();
                r.passed = r.passed && ratio >= 1.5;
            }
            return r;
        }

        inline auto check_correlated_bound() -> CheckResult
        {
            CheckResult r{9, "correlated-bound", false, "", 0};
            std::mt19937_64 rng(9);
            int tested = 0, violations = 0, unreachable = 0;
            std::uint64_t worst_slack = UINT64_MAX;
            while (tested < 500) {
                RandomGameOptions o;
                o.u = std::uniform_int_distribution<int>(2, 4)(rng);
                o.w = std::uniform_int_distribution<int>(2, 4)(rng);
                o.correlated = true;
                o.weight_levels = std::uniform_int_distribution<int>(2, 6)(rng);
                o.max_edges = 8;
                o.link_p = 0.3;
                Game g(random_game(rng, o));
                if (g.edges().empty())
                    continue;
                auto init = random_matching(rng, g);
                auto a = decide_reach_any(g, init);
                if (a.verdict != Verdict::Reachable) {
                    ++unreachable;
                    continue;
                }
                ++tested;
                std::set<Rational> levels;
                for (std::int32_t id = 0; id < static_cast<std::int32_t>(g.edges().size()); ++id)
                    levels.insert(g.weight(id));
                std::uint64_t rmax = levels.size();
                auto bound = init.size() * rmax * rmax + a.reached->size() * rmax;
                if (*a.shortest_length > bound)
                    ++violations;
                else
                    worst_slack = std::min(worst_slack, bound - *a.shortest_length);
            }
            r.passed = violations == 0;
            r.detail = "games=" + std::to_string(tested) + " violations=" + std::to_string(violations) + " skipped_unreachable=" + std::to_string(unreachable)
                + " min_slack=" + std::to_string(worst_slack);
            return r;
        }

        inline auto max_is_weight(const WeightedGraph & g) -> std::int64_t { return g.weight_of(max_weighted_is_bruteforce(g)); }

        inline auto check_independent_sets() -> CheckResult
        {
            CheckResult r{10, "independent-set-correspondence", true, "", 0};
            Stopwatch clock;
            std::vector<WeightedGraph> graphs;
            {
                WeightedGraph k3, p3, c5;
                for (auto id : {"a", "b", "c"}) {
                    k3.add_vertex(id);
                    p3.add_vertex(id);
                }
                k3.add_edge("a", "b");
                k3.add_edge("b", "c");
                k3.add_edge("a", "c");
                p3.add_edge("a", "b");
                p3.add_edge("b", "c");
                for (int i = 0; i < 5; ++i)
                    c5.add_vertex("c" + std::to_string(i));
                for (int i = 0; i < 5; ++i)
                    c5.add_edge(i, (i + 1) % 5);
                graphs = {k3, p3, c5};
            }
            std::mt19937_64 rng(10);
            for (int i = 0; i < 10; ++i)
                graphs.push_back(random_graph(rng, std::uniform_int_distribution<int>(1, 6)(rng), 0.4));
            int forward_bad = 0;
            for (auto & graph : graphs) {
                Game g(is_to_jobmarket(graph));
                auto m = max_lsm(g);
                if (! m || static_cast<std::int64_t>(m->size()) != graph.size() + max_is_weight(graph))
                    ++forward_bad;
            }

            std::vector<NetworkGame> games{circling_gadget()};
            for (int i = 0; i < 5; ++i) {
                RandomGameOptions o;
                o.u = std::uniform_int_distribution<int>(2, 4)(rng);
                o.w = std::uniform_int_distribution<int>(2, 4)(rng);
                games.push_back(random_game(rng, o));
            }
            int reverse_bad = 0;
            for (auto & spec : games) {
                Game g(spec);
                std::int64_t n = g.size();
                auto m = max_lsm(g);
                if (! m || max_is_weight(game_to_weighted_is(g)) != n * n - n + static_cast<std::int64_t>(m->size()))
                    ++reverse_bad;
            }
            Game cycle(roommates_cycle_game());
            std::int64_t n = cycle.size();
            auto cycle_weight = max_is_weight(game_to_weighted_is(cycle));
            bool no_lsm = ! find_lsm(cycle).has_value() && cycle_weight < n * n - n;

            r.passed = forward_bad == 0 && reverse_bad == 0 && no_lsm && clock.seconds() < 300;
            r.detail = "forward_graphs=" + std::to_string(graphs.size()) + " forward_bad=" + std::to_string(forward_bad) + " reverse_games=" + std::to_string(games.size())
                + " reverse_bad=" + std::to_string(reverse_bad) + " no_lsm_weight=" + std::to_string(cycle_weight) + "<" + std::to_string(n * n - n);
            return r;
        }

        inline auto check_two_approximation() -> CheckResult
        {
            CheckResult r{11, "two-approximation", false, "", 0};
            std::mt19937_64 rng(11);
            int bad = 0, unstable = 0;
            for (int trial = 0; trial < 500; ++trial) {
                RandomGameOptions o;
                o.u = std::uniform_int_distribution<int>(1, 5)(rng);
                o.w = std::uniform_int_distribution<int>(1, 5)(rng);
                o.link_p = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
                Game g(random_game(rng, o));
                auto stable = stable_matching_bipartite(g);
                if (! is_globally_stable(g, stable))
                    ++unstable;
                auto best = max_lsm(g);
                if (! best || 2 * stable.size() < best->size())
                    ++bad;
            }
            r.passed = bad == 0 && unstable == 0;
            r.detail = "games=500 violations=" + std::to_string(bad) + " unstable_outputs=" + std::to_string(unstable);
            return r;
        }

        inline auto check_lp() -> CheckResult
        {
            CheckResult r{12, "lp-correspondence", false, "", 0};
            bool circ = verify_lp_correspondence(Game(circling_gadget()));
            Game ex(polytope_example_game());
            bool example = verify_lp_correspondence(ex);
            auto point = polytope_example_point(ex, Rational(1, 4));
            bool fractional = check_feasible(emit_lp(ex), point);
            std::mt19937_64 rng(12);
            int bad = 0;
            for (int trial = 0; trial < 200; ++trial) {
                RandomGameOptions o;
                if (trial % 2 == 0) {
                    o.u = std::uniform_int_distribution<int>(1, 4)(rng);
                    o.w = std::uniform_int_distribution<int>(1, 4)(rng);
                }
                else {
                    o.u = std::uniform_int_distribution<int>(2, 8)(rng);
                    o.w = 0;
                    o.edge_p = 0.45;
                }
                o.correlated = trial % 5 == 0;
                bad += ! verify_lp_correspondence(Game(random_game(rng, o)));
            }
            r.passed = circ && example && fractional && bad == 0;
            r.detail = std::string("circling=") + (circ ? "ok" : "fail") + " example=" + (example ? "ok" : "fail") + " fractional_point=" + (fractional ? "feasible" : "infeasible")
                + " random_failures=" + std::to_string(bad) + "/200";
            return r;
        }

        inline auto check_roommates() -> CheckResult
        {
            CheckResult r{13, "roommates-existence", false, "", 0};
            Game sat(roommates_existence_reduction(sat_formula()));
            Game unsat(roommates_existence_reduction(unsat_formula()));
            auto found_sat = find_lsm(sat);
            auto found_unsat = find_lsm(unsat);
            bool witness = found_sat && is_locally_stable(sat, *found_sat);
            r.passed = witness && ! found_unsat;
            r.detail = std::string("sat_has_lsm=") + (found_sat ? "yes" : "no") + " unsat_has_lsm=" + (found_unsat ? "yes" : "no");
            return r;
        }
    }

    inline constexpr int check_count = 13;

    inline auto check_name(int id) -> std::string
    {
        static const char * names[] = {"circling-gadget", "reach-target-correlated", "reach-target-job-market", "reach-any-general", "two-phase-recency",
            "memory-defeat", "random-memory", "exponential-growth", "correlated-bound", "independent-set-correspondence", "two-approximation",
            "lp-correspondence", "roommates-existence"};
        if (id < 1 || id > check_count)
            throw GameError("no check " + std::to_string(id));
        return names[id - 1];
    }

    /// Runs one check; exceptions are reported as failures.
    inline auto run_check(int id) -> CheckResult
    {
        detail::Stopwatch clock;
        CheckResult r{id, check_name(id), false, "", 0};
        try {
            switch (id) {
            case 1: r = detail::check_circling(); break;
            case 2: r = detail::check_target_reduction(2, check_name(2), &reduction_thm1, false); break;
            case 3: r = detail::check_target_reduction(3, check_name(3), &reduction_cor2, true); break;
            case 4: r = detail::check_thm3(); break;
            case 5: r = detail::check_two_phase(); break;
            case 6: r = detail::check_memory_defeat(); break;
            case 7: r = detail::check_random_memory(); break;
            case 8: r = detail::check_exponential(); break;
            case 9: r = detail::check_correlated_bound(); break;
            case 10: r = detail::check_independent_sets(); break;
            case 11: r = detail::check_two_approximation(); break;
            case 12: r = detail::check_lp(); break;
            case 13: r = detail::check_roommates(); break;
            }
        }
        catch (const std::exception & e) {
            r.passed = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = clock.seconds();
        return r;
    }

    /// Accepts "all", a number 1..13 or a check name.
    inline auto parse_suite(const std::string & suite) -> std::vector<int>
    {
        std::vector<int> ids;
        if (suite == "all") {
            for (int i = 1; i <= check_count; ++i)
                ids.push_back(i);
            return ids;
        }
        for (int i = 1; i <= check_count; ++i)
            if (suite == std::to_string(i) || suite == check_name(i))
                return {i};
        throw GameError("unknown verify suite '" + suite + "'");
    }
}
