#pragma once

// Seeded random instances for property tests and the acceptance checks.

#include <lsm/centralized.hpp>
#include <lsm/game.hpp>
#include <lsm/matching.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lsm
{
    struct RandomGameOptions
    {
        /// Sizes of U and W; with w == 0 the game has u untagged vertices and any pair may be an edge.
        int u = 3, w = 3;
        double edge_p = 0.6;
        double link_p = 0.3;
        bool links_inside_u = true;
        bool complete_links = false;
        bool correlated = false;
        int weight_levels = 4;
        std::size_t max_edges = SIZE_MAX;
    };

    namespace detail
    {
        inline auto coin(std::mt19937_64 & rng, double p) -> bool { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }
    }

    inline auto random_game(std::mt19937_64 & rng, const RandomGameOptions & o) -> NetworkGame
    {
        NetworkGame g;
        g.name = "random";
        bool bip = o.w > 0;
        std::vector<std::string> us, ws;
        for (int i = 1; i <= o.u; ++i) {
            us.push_back((bip ? "u" : "v") + std::to_string(i));
            g.add_vertex(us.back(), bip ? std::optional<Side>(Side::U) : std::nullopt);
        }
        for (int i = 1; i <= o.w; ++i) {
            ws.push_back("w" + std::to_string(i));
            g.add_vertex(ws.back(), Side::W);
        }
        auto n = g.vertices.size();
        auto is_u = [&](std::size_t i) { return bip && i < us.size(); };
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                if (! o.links_inside_u && is_u(i) && is_u(j))
                    continue;
                if (o.complete_links || detail::coin(rng, o.link_p))
                    g.add_link(g.vertices[i].id, g.vertices[j].id);
            }

        std::vector<std::pair<std::string, std::string>> pairs;
        if (bip) {
            for (auto & a : us)
                for (auto & b : ws)
                    if (detail::coin(rng, o.edge_p))
                        pairs.emplace_back(a, b);
        }
        else {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (detail::coin(rng, o.edge_p))
                        pairs.emplace_back(g.vertices[i].id, g.vertices[j].id);
        }
        if (pairs.size() > o.max_edges) {
            std::shuffle(pairs.begin(), pairs.end(), rng);
            pairs.resize(o.max_edges);
            std::sort(pairs.begin(), pairs.end());
        }

        std::map<std::string, std::vector<std::string>> nbrs;
        for (auto & [a, b] : pairs) {
            if (o.correlated)
                g.add_edge(a, b, Rational(std::uniform_int_distribution<int>(1, o.weight_levels)(rng)));
            else
                g.add_edge(a, b);
            nbrs[a].push_back(b);
            nbrs[b].push_back(a);
        }
        if (! o.correlated)
            for (auto & v : g.vertices) {
                auto it = nbrs.find(v.id);
                if (it == nbrs.end())
                    continue;
                auto p = it->second;
                std::shuffle(p.begin(), p.end(), rng);
                g.set_preferences(v.id, p);
            }
        return g;
    }

    /// Each edge, in random order, is kept with probability 1/2 when both ends are free.
    inline auto random_matching(std::mt19937_64 & rng, const Game & game) -> Matching
    {
        auto edges = game.edges();
        std::shuffle(edges.begin(), edges.end(), rng);
        std::vector<char> used(game.size(), 0);
        std::vector<Edge> chosen;
        for (auto & e : edges)
            if (! used[e.a] && ! used[e.b] && detail::coin(rng, 0.5)) {
                used[e.a] = used[e.b] = 1;
                chosen.push_back(e);
            }
        return Matching(chosen);
    }

    /// G(n, p) with unit weights and ids g1..gn.
    inline auto random_graph(std::mt19937_64 & rng, int n, double p) -> WeightedGraph
    {
        WeightedGraph g;
        for (int i = 1; i <= n; ++i)
            g.add_vertex("g" + std::to_string(i));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (detail::coin(rng, p))
                    g.add_edge(i, j);
        return g;
    }

    /// Three players with complete links and cyclic preferences; no matching is locally stable.
    inline auto roommates_cycle_game() -> NetworkGame
    {
        NetworkGame g;
        g.name = "roommates-cycle";
        for (auto v : {"r1", "r2", "r3"})
            g.add_vertex(v);
        g.add_link("r1", "r2").add_link("r2", "r3").add_link("r1", "r3");
        g.add_edge("r1", "r2").add_edge("r2", "r3").add_edge("r1", "r3");
        g.set_preferences("r1", {"r2", "r3"});
        g.set_preferences("r2", {"r3", "r1"});
        g.set_preferences("r3", {"r1", "r2"});
        return g;
    }
}
