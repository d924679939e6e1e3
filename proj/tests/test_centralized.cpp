#include <lsm/centralized.hpp>
#include <lsm/gadgets.hpp>
#include <lsm/random_games.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace lsm;

namespace
{
    /// Exhaustive maximum-weight independent set over all vertex subsets.
    auto naive_max_is_weight(const WeightedGraph & g) -> std::int64_t
    {
        std::int64_t best = 0;
        auto n = g.size();
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            bool ok = true;
            for (auto [a, b] : g.edges)
                if ((mask >> a & 1) && (mask >> b & 1))
                    ok = false;
            if (! ok)
                continue;
            std::int64_t w = 0;
            for (int v = 0; v < n; ++v)
                if (mask >> v & 1)
                    w += g.weights[v];
            best = std::max(best, w);
        }
        return best;
    }

    auto naive_max_lsm_size(const Game & g) -> std::optional<std::size_t>
    {
        std::optional<std::size_t> best;
        for_each_matching(g, [&](const Matching & m) {
            if (is_locally_stable(g, m) && (! best || m.size() > *best))
                best = m.size();
        });
        return best;
    }

    /// No pair of E where both strictly improve, from the rankings directly.
    auto naive_globally_stable(const Game & g, const Matching & m) -> bool
    {
        auto mate = m.mates(g.size());
        auto better = [&](VertexIndex v, VertexIndex p) { return mate[v] == no_vertex || g.rank(v, p) > g.rank(v, mate[v]); };
        for (auto & e : g.edges())
            if (mate[e.a] != e.b && better(e.a, e.b) && better(e.b, e.a))
                return false;
        return true;
    }

    auto graph(int n, const std::vector<std::pair<int, int>> & edges) -> WeightedGraph
    {
        WeightedGraph g;
        for (int i = 1; i <= n; ++i)
            g.add_vertex("g" + std::to_string(i));
        for (auto [a, b] : edges)
            g.add_edge(a, b);
        return g;
    }

    auto random_bipartite(std::mt19937_64 & rng, int max_side) -> NetworkGame
    {
        RandomGameOptions o;
        o.u = std::uniform_int_distribution<int>(1, max_side)(rng);
        o.w = std::uniform_int_distribution<int>(1, max_side)(rng);
        o.correlated = rng() % 3 == 0;
        return random_game(rng, o);
    }
}

TEST(MaxLsm, CirclingIsPerfect)
{
    Game g(circling_gadget());
    EXPECT_EQ(max_lsm_bruteforce(g).size(), 4u);
}

TEST(MaxLsm, ThrowsWithoutLsm)
{
    Game g(roommates_cycle_game());
    EXPECT_THROW(max_lsm_bruteforce(g), GameError);
}

TEST(MaxLsm, MatchesExhaustiveEnumeration)
{
    std::mt19937_64 rng(51);
    for (int t = 0; t < 200; ++t) {
        Game g(random_bipartite(rng, 4));
        auto m = max_lsm_bruteforce(g);
        EXPECT_TRUE(is_locally_stable(g, m));
        EXPECT_EQ(m.size(), naive_max_lsm_size(g));
    }
}

TEST(DeferredAcceptance, IsGloballyStable)
{
    std::mt19937_64 rng(52);
    for (int t = 0; t < 300; ++t) {
        Game g(random_bipartite(rng, 5));
        auto m = stable_matching_bipartite(g);
        ASSERT_NO_THROW(check_matching(g, m));
        EXPECT_TRUE(naive_globally_stable(g, m));
        EXPECT_EQ(is_globally_stable(g, m), naive_globally_stable(g, m));
        EXPECT_TRUE(is_locally_stable(g, m));
    }
}

TEST(DeferredAcceptance, IsAtLeastHalfOfMaximum)
{
    std::mt19937_64 rng(53);
    for (int t = 0; t < 200; ++t) {
        Game g(random_bipartite(rng, 4));
        auto m = stable_matching_bipartite(g);
        EXPECT_GE(2 * m.size(), max_lsm_bruteforce(g).size());
    }
}

TEST(DeferredAcceptance, RejectsNonBipartite)
{
    Game g(roommates_cycle_game());
    EXPECT_THROW(stable_matching_bipartite(g), GameError);
}

TEST(GlobalStability, CirclingLocalButNotGlobal)
{
    Game g(circling_gadget());
    auto m = matching_from_ids(g, {{"1", "B"}, {"2", "C"}, {"3", "D"}, {"4", "A"}});
    EXPECT_TRUE(is_locally_stable(g, m));
    EXPECT_EQ(is_globally_stable(g, m), naive_globally_stable(g, m));
    EXPECT_FALSE(is_globally_stable(g, Matching{}));
}

TEST(IndependentSet, TriangleGivesFour)
{
    auto k3 = graph(3, {{0, 1}, {1, 2}, {0, 2}});
    Game g(is_to_jobmarket(k3));
    EXPECT_EQ(g.size(), 12);
    EXPECT_EQ(max_lsm_bruteforce(g).size(), 4u);
}

TEST(IndependentSet, PathGivesFive)
{
    auto p3 = graph(3, {{0, 1}, {1, 2}});
    Game g(is_to_jobmarket(p3));
    EXPECT_EQ(max_lsm_bruteforce(g).size(), 5u);
}

TEST(IndependentSet, JobMarketShape)
{
    auto p3 = graph(3, {{0, 1}, {1, 2}});
    auto spec = is_to_jobmarket(p3);
    for (auto & l : spec.links)
        for (auto id : {l.a, l.b})
            EXPECT_EQ(id.rfind("w", 0), 0u) << id;
    EXPECT_TRUE(validate_game(spec).empty());
    EXPECT_EQ(spec.preferences.at("w2:g2"), (std::vector<std::string>{"u1:g2", "u1:g1", "u1:g3", "u2:g2"}));
}

TEST(IndependentSet, RandomGraphsMatchIndependenceNumber)
{
    std::mt19937_64 rng(54);
    for (int t = 0; t < 30; ++t) {
        auto wg = random_graph(rng, 2 + t % 4, 0.5);
        Game g(is_to_jobmarket(wg));
        EXPECT_EQ(static_cast<std::int64_t>(max_lsm_bruteforce(g).size()), wg.size() + naive_max_is_weight(wg));
    }
}

TEST(WeightedIs, BranchAndBoundMatchesNaive)
{
    std::mt19937_64 rng(55);
    for (int t = 0; t < 100; ++t) {
        auto g = random_graph(rng, 1 + t % 14, 0.3);
        for (auto & w : g.weights)
            w = std::uniform_int_distribution<std::int64_t>(1, 9)(rng);
        auto set = max_weighted_is_bruteforce(g);
        EXPECT_TRUE(g.independent(set));
        EXPECT_EQ(g.weight_of(set), naive_max_is_weight(g));
    }
}

TEST(WeightedIs, GraphValidationAndIo)
{
    WeightedGraph g;
    g.add_vertex("a", 3);
    g.add_vertex("b");
    g.add_edge("a", "b");
    EXPECT_THROW(g.add_vertex("a"), GameError);
    EXPECT_THROW(g.add_vertex("c", 0), GameError);
    EXPECT_THROW(g.add_edge("a", "a"), GameError);
    std::ostringstream out;
    write_weighted_graph(out, g);
    std::istringstream in(out.str());
    auto back = read_weighted_graph(in);
    EXPECT_EQ(back.ids, g.ids);
    EXPECT_EQ(back.weights, g.weights);
    EXPECT_EQ(back.edges, g.edges);
}

TEST(ReverseReduction, Weights)
{
    Game g(circling_gadget());
    auto wg = game_to_weighted_is(g);
    EXPECT_EQ(wg.size(), 12 + 16);
    EXPECT_EQ(wg.weights[wg.index_of("v:1")], 11);
    EXPECT_EQ(wg.weights[wg.index_of("e:1:A")], 23);
}

TEST(ReverseReduction, CirclingWeight)
{
    Game g(circling_gadget());
    auto wg = game_to_weighted_is(g);
    auto set = max_weighted_is_bruteforce(wg);
    EXPECT_EQ(wg.weight_of(set), 12 * 12 - 12 + 4);
}

TEST(ReverseReduction, NoLsmStaysBelowThreshold)
{
    Game g(roommates_cycle_game());
    auto wg = game_to_weighted_is(g);
    EXPECT_LT(naive_max_is_weight(wg), 3 * 3 - 3);
    EXPECT_EQ(wg.weight_of(max_weighted_is_bruteforce(wg)), naive_max_is_weight(wg));
}

TEST(ReverseReduction, RandomGamesMatchMaxLsm)
{
    std::mt19937_64 rng(56);
    int checked = 0;
    for (int t = 0; t < 60; ++t) {
        RandomGameOptions o;
        o.u = std::uniform_int_distribution<int>(3, 5)(rng);
        o.w = t % 2 ? 0 : 2;
        o.edge_p = 0.5;
        Game g(random_game(rng, o));
        auto wg = game_to_weighted_is(g);
        if (wg.size() > 20)
            continue;
        ++checked;
        auto n = static_cast<std::int64_t>(g.size());
        auto best = naive_max_is_weight(wg);
        ASSERT_EQ(wg.weight_of(max_weighted_is_bruteforce(wg)), best);
        auto k = naive_max_lsm_size(g);
        if (k)
            EXPECT_EQ(best, n * n - n + static_cast<std::int64_t>(*k));
        else
            EXPECT_LT(best, n * n - n);
    }
    EXPECT_GT(checked, 20);
}

TEST(Lp, VariablesAndBalance)
{
    Game g(circling_gadget());
    auto lp = emit_lp(g);
    EXPECT_EQ(lp.variables.size(), g.edges().size() + static_cast<std::size_t>(g.size()));
    EXPECT_EQ(lp.variables.front(), edge_variable(g, g.edges().front()));
    EXPECT_EQ(lp.variables.back(), "x_v:b4");
    auto balances = std::count_if(lp.constraints.begin(), lp.constraints.end(), [](const Constraint & c) { return c.label.rfind("balance:", 0) == 0; });
    EXPECT_EQ(balances, g.size());
}

TEST(Lp, IncidenceVectorsOfLsmsAreFeasible)
{
    Game g(circling_gadget());
    auto lp = emit_lp(g);
    for (auto & m : enumerate_lsm(g))
        EXPECT_TRUE(check_feasible(lp, incidence_vector(g, m)));
    EXPECT_EQ(first_violation(lp, incidence_vector(g, Matching{})).value_or(""), "free:1:A");
}

TEST(Lp, IncidenceVector)
{
    Game g(circling_gadget());
    auto x = incidence_vector(g, matching_from_ids(g, {{"1", "B"}}));
    EXPECT_EQ(x.at("x_e:1:B"), Rational(1));
    EXPECT_EQ(x.at("x_e:1:A"), Rational(0));
    EXPECT_EQ(x.at("x_v:1"), Rational(0));
    EXPECT_EQ(x.at("x_v:2"), Rational(1));
    EXPECT_EQ(x.size(), 16u + 12u);
}

TEST(Lp, MissingVariableThrows)
{
    Game g(circling_gadget());
    auto lp = emit_lp(g);
    auto x = incidence_vector(g, Matching{});
    x.erase("x_v:3");
    EXPECT_THROW(check_feasible(lp, x), GameError);
    x["x_v:3"] = Rational(-1);
    EXPECT_EQ(first_violation(lp, x).value_or(""), "nonnegative:x_v:3");
}

TEST(Lp, CorrespondenceOnRandomGames)
{
    std::mt19937_64 rng(57);
    for (int t = 0; t < 100; ++t) {
        RandomGameOptions o;
        o.u = std::uniform_int_distribution<int>(2, 4)(rng);
        o.w = t % 3 ? 3 : 0;
        o.correlated = t % 4 == 0;
        Game g(random_game(rng, o));
        EXPECT_TRUE(verify_lp_correspondence(g)) << game_to_text(g.spec());
    }
    EXPECT_TRUE(verify_lp_correspondence(Game(roommates_cycle_game())));
}

TEST(Lp, ExampleLsms)
{
    Game g(polytope_example_game());
    auto lsms = enumerate_lsm(g);
    for (auto pairs : {std::vector<std::pair<std::string, std::string>>{{"1", "B"}, {"2", "D"}}, {{"1", "D"}, {"2", "B"}}, {}})
        EXPECT_NE(std::find(lsms.begin(), lsms.end(), matching_from_ids(g, pairs)), lsms.end());
}

TEST(Lp, ExampleFractionalPointIsFeasible)
{
    Game g(polytope_example_game());
    auto lp = emit_lp(g);
    for (auto eps : {Rational(1, 8), Rational(1, 4), Rational(1, 3)}) {
        auto x = polytope_example_point(g, eps);
        EXPECT_EQ(first_violation(lp, x), std::nullopt) << rational_to_string(eps);
    }
    auto x = polytope_example_point(g, Rational(1, 4));
    EXPECT_EQ(x.at("x_v:A"), Rational(3, 4));
    EXPECT_EQ(x.at("x_v:B"), Rational(1, 4));
    EXPECT_EQ(x.at("x_v:C"), Rational(1));
    EXPECT_EQ(x.at("x_v:D"), Rational(0));
}

TEST(Lp, PrintedExampleCutsOffThePoint)
{
    Game g(polytope_example_game(true));
    auto lp = emit_lp(g);
    EXPECT_EQ(first_violation(lp, polytope_example_point(g, Rational(1, 4))).value_or(""), "matched:1:A:C");
    EXPECT_FALSE(is_locally_stable(g, matching_from_ids(g, {{"1", "B"}, {"2", "D"}})));
}

TEST(Lp, WriterFormat)
{
    Game g(polytope_example_game());
    std::ostringstream out;
    write_lp(out, emit_lp(g));
    auto text = out.str();
    EXPECT_EQ(text.rfind("\\ lsm-format 1\nMinimize\n obj: 0 x_e.1.A\nSubject To\n", 0), 0u);
    EXPECT_NE(text.find(" balance.1: x_e.1.A + x_e.1.B + x_e.1.C + x_e.1.D + x_v.1 = 1\n"), std::string::npos);
    EXPECT_NE(text.find(" <= 1\n"), std::string::npos);
    EXPECT_EQ(text.substr(text.size() - 4), "End\n");
    EXPECT_EQ(text.find("x_e:"), std::string::npos);
}

TEST(Lp, PointRoundTrip)
{
    Game g(polytope_example_game());
    auto x = polytope_example_point(g, Rational(1, 4));
    std::ostringstream out;
    write_point(out, x);
    std::istringstream in(out.str());
    EXPECT_EQ(read_point(in), x);
    std::istringstream twice("x 1\nx 2\n");
    EXPECT_THROW(read_point(twice), ParseError);
    std::istringstream bad("x one\n");
    EXPECT_THROW(read_point(bad), ParseError);
}
