#include <lsm/dynamics.hpp>
#include <lsm/gadgets.hpp>
#include <lsm/io.hpp>
#include <lsm/model.hpp>
#include <lsm/random_games.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <deque>
#include <random>
#include <sstream>

using namespace lsm;

namespace
{
    /// Breadth-first distance in (V, L u M), computed from the string-level description.
    auto oracle_distance(const Game & g, const Matching & m, VertexIndex s, VertexIndex t) -> int
    {
        std::vector<std::vector<VertexIndex>> adj(g.size());
        for (auto & l : g.links()) {
            adj[l.a].push_back(l.b);
            adj[l.b].push_back(l.a);
        }
        for (auto & e : m.edges()) {
            adj[e.a].push_back(e.b);
            adj[e.b].push_back(e.a);
        }
        std::vector<int> dist(g.size(), -1);
        std::deque<VertexIndex> queue{s};
        dist[s] = 0;
        while (! queue.empty()) {
            auto v = queue.front();
            queue.pop_front();
            for (auto w : adj[v])
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
        }
        return dist[t] < 0 ? 1 << 20 : dist[t];
    }

    auto oracle_prefers(const Game & g, VertexIndex v, VertexIndex a, VertexIndex current) -> bool
    {
        if (current == no_vertex)
            return true;
        if (g.correlated())
            return g.weight(g.edge_id(v, a)) > g.weight(g.edge_id(v, current));
        auto & r = g.spec().preferences.at(g.id(v));
        auto pos = [&](VertexIndex x) { return std::find(r.begin(), r.end(), g.id(x)) - r.begin(); };
        return pos(a) < pos(current);
    }

    /// Memory-free local blocking pairs from first principles.
    auto oracle_blocking(const Game & g, const Matching & m) -> std::vector<Edge>
    {
        auto mate = m.mates(g.size());
        std::vector<Edge> out;
        for (auto & e : g.edges())
            if (mate[e.a] != e.b && oracle_distance(g, m, e.a, e.b) <= 2 && oracle_prefers(g, e.a, e.b, mate[e.a]) && oracle_prefers(g, e.b, e.a, mate[e.b]))
                out.push_back(e);
        return out;
    }

    auto pairs_of(const std::vector<BlockingPair> & bps) -> std::vector<Edge>
    {
        std::vector<Edge> out;
        for (auto & b : bps)
            out.push_back(b.pair);
        return out;
    }

    auto single_edge_game() -> NetworkGame
    {
        NetworkGame g;
        g.add_vertex("x", Side::U).add_vertex("y", Side::W).add_link("x", "y").add_edge("x", "y");
        g.set_preferences("x", {"y"}).set_preferences("y", {"x"});
        return g;
    }

    auto edge(const Game & g, const std::string & a, const std::string & b) -> Edge { return make_edge(g.index_of(a), g.index_of(b)); }

    auto has_error(const std::vector<std::string> & errors, const std::string & needle) -> bool
    {
        return std::any_of(errors.begin(), errors.end(), [&](const std::string & e) { return e.find(needle) != std::string::npos; });
    }

    auto random_instance(std::mt19937_64 & rng) -> NetworkGame
    {
        RandomGameOptions o;
        o.u = std::uniform_int_distribution<int>(1, 5)(rng);
        o.w = std::uniform_int_distribution<int>(0, 4)(rng);
        if (o.w == 0)
            o.u += 2;
        o.correlated = rng() % 3 == 0;
        o.link_p = 0.35;
        return random_game(rng, o);
    }
}

TEST(ValidateGame, CirclingGadgetIsWellFormed) { EXPECT_TRUE(validate_game(circling_gadget()).empty()); }

TEST(ValidateGame, ZeroWeightIsRejected)
{
    NetworkGame g;
    g.add_vertex("x").add_vertex("y").add_edge("x", "y", Rational(0));
    EXPECT_TRUE(has_error(validate_game(g), "non-positive weight"));
}

TEST(ValidateGame, RankingOfNonNeighbourIsRejected)
{
    auto g = single_edge_game();
    g.add_vertex("z", Side::W);
    g.set_preferences("x", {"y", "z"});
    EXPECT_TRUE(has_error(validate_game(g), "ranking covers non-neighbor"));
}

TEST(ValidateGame, ReportsStructuralErrors)
{
    NetworkGame g;
    g.add_vertex("x", Side::U).add_vertex("x", Side::U).add_vertex("y").add_link("y", "y").add_edge("x", "q");
    auto errors = validate_game(g);
    EXPECT_TRUE(has_error(errors, "duplicate vertex id"));
    EXPECT_TRUE(has_error(errors, "self-loop"));
    EXPECT_TRUE(has_error(errors, "unknown vertex 'q'"));
    EXPECT_TRUE(has_error(errors, "partition tags"));
    EXPECT_THROW(Game{g}, GameError);
}

TEST(ValidateGame, RankingMustBeStrictAndComplete)
{
    auto g = single_edge_game();
    g.add_vertex("z", Side::W).add_edge("x", "z");
    g.set_preferences("x", {"y", "y"});
    g.set_preferences("z", {"x"});
    auto errors = validate_game(g);
    EXPECT_TRUE(has_error(errors, "not strict"));
    EXPECT_TRUE(has_error(errors, "misses neighbor 'z'"));
}

TEST(ValidateGame, WeightedGameMayNotCarryRankings)
{
    NetworkGame g;
    g.add_vertex("x").add_vertex("y").add_edge("x", "y", Rational(2)).set_preferences("x", {"y"});
    EXPECT_TRUE(has_error(validate_game(g), "rankings given for a correlated"));
}

TEST(Utility, CirclingRowForVertexOne)
{
    Game g(circling_gadget());
    EXPECT_GT(utility(g, "1", "C"), utility(g, "1", "B"));
    EXPECT_GT(utility(g, "1", "B"), utility(g, "1", "A"));
    EXPECT_GT(utility(g, "1", "A"), utility(g, "1", "D"));
}

TEST(Utility, CorrelatedClauseWeightsToA)
{
    CnfFormula f{2, {{1, 2, -1}, {-2, 1, 2}, {2, 2, 1}}};
    Game g(reduction_thm1(f).game);
    for (int j = 1; j <= 3; ++j)
        EXPECT_EQ(utility(g, "uC:" + std::to_string(j), "a"), Rational(j));
}

TEST(Utility, UnmatchedIsBelowEveryPartner)
{
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        Game g(random_instance(rng));
        for (VertexIndex v = 0; v < g.size(); ++v)
            for (auto p : g.neighbours(v)) {
                EXPECT_TRUE(g.prefers(v, p, no_vertex));
                EXPECT_GT(utility(g, v, p), Rational(0));
            }
    }
}

TEST(Utility, NonEdgeThrows)
{
    Game g(circling_gadget());
    EXPECT_THROW(utility(g, "1", "2"), GameError);
}

TEST(Accessible, CirclingEmptyMatching)
{
    Game g(circling_gadget());
    EXPECT_TRUE(accessible(g, {}, "1", "A"));
    EXPECT_FALSE(accessible(g, {}, "1", "C"));
    EXPECT_EQ(accessible(g, {}, "1", "C"), oracle_distance(g, {}, g.index_of("1"), g.index_of("C")) <= 2);
}

TEST(Accessible, LinkedPairIsAccessible)
{
    Game g(circling_gadget());
    for (auto & l : g.links())
        EXPECT_TRUE(accessible(g, {}, l.a, l.b));
}

TEST(Accessible, UnknownVertexAndSelfThrow)
{
    Game g(circling_gadget());
    EXPECT_THROW(accessible(g, {}, "1", "nope"), GameError);
    EXPECT_THROW(accessible(g, {}, "1", "1"), GameError);
}

TEST(Accessible, MatchesDistanceOracleAndIsSymmetric)
{
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        Game g(random_instance(rng));
        auto m = random_matching(rng, g);
        for (VertexIndex u = 0; u < g.size(); ++u)
            for (VertexIndex v = 0; v < g.size(); ++v) {
                if (u == v)
                    continue;
                auto a = accessible(g, m, u, v);
                ASSERT_EQ(a, oracle_distance(g, m, u, v) <= 2);
                ASSERT_EQ(a, accessible(g, m, v, u));
            }
    }
}

TEST(AccessibleWithMemory, RememberedPartnerIsAccessible)
{
    Game g(circling_gadget());
    auto s = make_state(g, {}, {MemoryKind::Recency});
    s = apply_step(g, s, edge(g, "1", "A"));
    s = apply_step(g, s, edge(g, "1", "B"));
    auto one = g.index_of("1"), a = g.index_of("A");
    ASSERT_EQ(s.memory[one], a);
    EXPECT_TRUE(accessible_with_memory(g, s, one, a));
}

TEST(AccessibleWithMemory, MemoryGrantsAccessBeyondDistanceTwo)
{
    Game g(circling_gadget());
    std::mt19937_64 rng(11);
    bool seen = false;
    for (int run = 0; run < 50 && ! seen; ++run) {
        auto s = make_state(g, {}, {MemoryKind::Recency}, rng());
        for (int step = 0; step < 60 && ! seen; ++step) {
            auto bps = local_blocking_pairs(g, s);
            s = apply_step(g, s, bps[rng() % bps.size()]);
            auto m = s.matching();
            for (VertexIndex v = 0; v < g.size(); ++v) {
                auto p = s.memory[v];
                if (p == no_vertex || accessible(g, m, v, p))
                    continue;
                EXPECT_TRUE(accessible_with_memory(g, s, v, p));
                EXPECT_TRUE(accessible_with_memory(g, s, p, v));
                seen = true;
            }
        }
    }
    EXPECT_TRUE(seen);
}

TEST(AccessibleWithMemory, EmptyScopeReducesToAccessible)
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 40; ++t) {
        Game g(random_instance(rng));
        auto run = run_random(g, {}, {MemoryKind::Recency, MemoryScope::nobody()}, rng(), 20, false);
        auto m = run.final.matching();
        for (VertexIndex u = 0; u < g.size(); ++u)
            for (VertexIndex v = 0; v < g.size(); ++v)
                if (u != v) {
                    ASSERT_EQ(accessible_with_memory(g, run.final, u, v), accessible(g, m, u, v));
                }
    }
}

TEST(LocalBlockingPairs, CirclingEmptyMatching)
{
    Game g(circling_gadget());
    auto got = pairs_of(local_blocking_pairs(g, make_state(g, {})));
    std::vector<Edge> expected{edge(g, "1", "A"), edge(g, "2", "B"), edge(g, "3", "C"), edge(g, "4", "D")};
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(got, expected);
    EXPECT_EQ(got, oracle_blocking(g, {}));
}

TEST(LocalBlockingPairs, CirclingStableMatchingHasNone)
{
    Game g(circling_gadget());
    auto m = matching_from_ids(g, {{"1", "B"}, {"2", "C"}, {"3", "D"}, {"4", "A"}});
    EXPECT_TRUE(local_blocking_pairs(g, make_state(g, m)).empty());
}

TEST(LocalBlockingPairs, ChannelsAreReported)
{
    Game g(circling_gadget());
    auto s = make_state(g, matching_from_ids(g, {{"1", "A"}}));
    auto bps = local_blocking_pairs(g, s);
    auto it = std::find_if(bps.begin(), bps.end(), [&](const BlockingPair & b) { return b.pair == edge(g, "1", "B"); });
    ASSERT_NE(it, bps.end());
    EXPECT_EQ(it->channel, Channel::MatchingPath);
}

TEST(LocalBlockingPairs, MatchOracleOnRandomGames)
{
    std::mt19937_64 rng(4);
    for (int t = 0; t < 200; ++t) {
        Game g(random_instance(rng));
        auto m = random_matching(rng, g);
        ASSERT_EQ(pairs_of(local_blocking_pairs(g, make_state(g, m))), oracle_blocking(g, m));
    }
}

TEST(LocalBlockingPairs, LocalityOnlyRemovesPairs)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 150; ++t) {
        auto spec = random_instance(rng);
        auto full = spec;
        full.links.clear();
        for (std::size_t i = 0; i < spec.vertices.size(); ++i)
            for (std::size_t j = i + 1; j < spec.vertices.size(); ++j)
                full.add_link(spec.vertices[i].id, spec.vertices[j].id);
        Game g(spec), gf(full);
        auto m = random_matching(rng, g);
        auto local = pairs_of(local_blocking_pairs(g, make_state(g, m)));
        auto global = pairs_of(local_blocking_pairs(gf, make_state(gf, m)));
        ASSERT_TRUE(std::includes(global.begin(), global.end(), local.begin(), local.end()));
    }
}

TEST(IsLocallyStable, CirclingMatchings)
{
    Game g(circling_gadget());
    EXPECT_TRUE(is_locally_stable(g, matching_from_ids(g, {{"1", "C"}, {"2", "D"}, {"3", "A"}, {"4", "B"}})));
    EXPECT_FALSE(is_locally_stable(g, Matching{}));
}

TEST(IsLocallyStable, SingleEdge)
{
    Game g(single_edge_game());
    EXPECT_TRUE(is_locally_stable(g, matching_from_ids(g, {{"x", "y"}})));
    EXPECT_FALSE(is_locally_stable(g, Matching{}));
}

TEST(IsLocallyStable, CompleteLinksGiveClassicalStability)
{
    std::mt19937_64 rng(6);
    for (int t = 0; t < 300; ++t) {
        RandomGameOptions o;
        o.u = std::uniform_int_distribution<int>(1, 4)(rng);
        o.w = std::uniform_int_distribution<int>(1, 4)(rng);
        o.complete_links = true;
        Game g(random_game(rng, o));
        auto m = random_matching(rng, g);
        auto mate = m.mates(g.size());
        bool classical = true;
        for (auto & e : g.edges())
            if (mate[e.a] != e.b && oracle_prefers(g, e.a, e.b, mate[e.a]) && oracle_prefers(g, e.b, e.a, mate[e.b]))
                classical = false;
        ASSERT_EQ(is_locally_stable(g, make_state(g, m, {MemoryKind::None, MemoryScope::nobody()})), classical);
    }
}

TEST(ApplyStep, SwitchUpdatesRecencyMemory)
{
    Game g(circling_gadget());
    auto s = make_state(g, matching_from_ids(g, {{"1", "A"}}), {MemoryKind::Recency});
    s = apply_step(g, s, edge(g, "1", "B"));
    EXPECT_EQ(s.matching(), matching_from_ids(g, {{"1", "B"}}));
    EXPECT_EQ(s.mate[g.index_of("A")], no_vertex);
    EXPECT_EQ(s.memory[g.index_of("1")], g.index_of("A"));
    EXPECT_EQ(s.memory[g.index_of("A")], g.index_of("1"));
}

TEST(ApplyStep, FirstEdgeLeavesMemoryEmpty)
{
    Game g(circling_gadget());
    auto s = apply_step(g, make_state(g, {}, {MemoryKind::Recency}), edge(g, "1", "A"));
    EXPECT_EQ(s.matching(), matching_from_ids(g, {{"1", "A"}}));
    EXPECT_TRUE(std::all_of(s.memory.begin(), s.memory.end(), [](VertexIndex m) { return m == no_vertex; }));
}

TEST(ApplyStep, QualityMemoryKeepsBestDepartedPartner)
{
    Game g(circling_gadget());
    auto one = g.index_of("1");
    auto s = make_state(g, {}, {MemoryKind::Quality});
    s = apply_step(g, s, edge(g, "1", "A"));
    s = apply_step(g, s, edge(g, "1", "B"));
    EXPECT_EQ(s.memory[one], g.index_of("A"));
    ASSERT_TRUE(g.prefers(one, g.index_of("B"), g.index_of("A")));
    s = apply_step(g, s, edge(g, "1", "C"));
    EXPECT_EQ(s.memory[one], g.index_of("B"));
}

TEST(ApplyStep, RecencyNeverRemembersCurrentPartner)
{
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        Game g(random_instance(rng));
        auto s = make_state(g, {}, {MemoryKind::Recency}, rng());
        for (int step = 0; step < 40; ++step) {
            auto bps = local_blocking_pairs(g, s);
            if (bps.empty())
                break;
            s = apply_step(g, s, bps[rng() % bps.size()]);
            for (VertexIndex v = 0; v < g.size(); ++v) {
                if (s.memory[v] == no_vertex)
                    continue;
                ASSERT_NE(s.memory[v], s.mate[v]);
                ASSERT_TRUE(g.is_edge(v, s.memory[v]));
                ASSERT_TRUE(std::binary_search(s.history[v].begin(), s.history[v].end(), s.memory[v]));
            }
        }
    }
}

TEST(ApplyStep, NonBlockingPairThrows)
{
    Game g(circling_gadget());
    auto s = make_state(g, {});
    EXPECT_THROW(apply_step(g, s, edge(g, "1", "C")), StepError);
    EXPECT_THROW(apply_step(g, s, edge(g, "1", "2")), StepError);
}

TEST(ApplyStep, PreservesMatchingInvariantUnderFuzzing)
{
    std::mt19937_64 rng(8);
    std::array<MemoryKind, 4> kinds{MemoryKind::None, MemoryKind::Random, MemoryKind::Recency, MemoryKind::Quality};
    for (int t = 0; t < 200; ++t) {
        Game g(random_instance(rng));
        auto s = make_state(g, random_matching(rng, g), {kinds[t % 4]}, rng());
        for (int step = 0; step < 30; ++step) {
            auto bps = local_blocking_pairs(g, s);
            if (bps.empty())
                break;
            auto pick = bps[rng() % bps.size()];
            s = apply_step(g, s, pick);
            ASSERT_EQ(s.mate[pick.pair.a], pick.pair.b);
            for (VertexIndex v = 0; v < g.size(); ++v)
                if (s.mate[v] != no_vertex) {
                    ASSERT_EQ(s.mate[s.mate[v]], v);
                }
            ASSERT_NO_THROW(check_matching(g, s.matching()));
        }
    }
}

TEST(ApplyStep, DeterministicForSeedAndSequence)
{
    Game g(circling_gadget());
    auto a = run_random(g, {}, {MemoryKind::Random}, 99, 500, true);
    auto b = run_random(g, {}, {MemoryKind::Random}, 99, 500, true);
    EXPECT_EQ(a.final, b.final);
    EXPECT_EQ(a.trace->steps, b.trace->steps);
}

TEST(GameIo, RoundTripPreservesGame)
{
    for (auto spec : {circling_gadget(), reduction_thm1({1, {{1, 1, 1}}}).game, quality_reset_gadget()}) {
        auto text = game_to_text(spec);
        std::istringstream in(text);
        auto back = read_game(in);
        EXPECT_EQ(game_to_text(back), text);
        EXPECT_TRUE(validate_game(back).empty());
    }
}

TEST(GameIo, MixedWeightsAndRankingsRejected)
{
    std::istringstream in("vertex x\nvertex y\nedge x y weight 2\npref x : y\n");
    EXPECT_THROW(read_game(in), ParseError);
}

TEST(GameIo, MalformedLinesReportLineNumbers)
{
    std::istringstream in("vertex x\nbogus line\n");
    try {
        read_game(in);
        FAIL();
    }
    catch (const ParseError & e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(GameIo, RationalWeights)
{
    EXPECT_EQ(parse_rational("7/2"), Rational(7, 2));
    EXPECT_EQ(parse_rational("1.25"), Rational(5, 4));
    EXPECT_EQ(rational_to_string(Rational(3, 2)), "3/2");
    EXPECT_THROW(parse_rational("x"), GameError);
}

TEST(GameIo, MatchingFiles)
{
    Game g(circling_gadget());
    auto m = matching_from_ids(g, {{"1", "B"}, {"2", "C"}});
    std::ostringstream out;
    write_matching(out, g, m);
    std::istringstream in(out.str());
    EXPECT_EQ(matching_from_ids(g, read_matching(in)), m);
    EXPECT_THROW(matching_from_ids(g, {{"1", "B"}, {"1", "C"}}), GameError);
    EXPECT_THROW(matching_from_ids(g, {{"1", "2"}}), GameError);
}
