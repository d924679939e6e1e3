#pragma once

#include <lsm/game.hpp>

#include <algorithm>
#include <string>
#include <vector>

namespace lsm
{
    /// A set of potential edges, at most one per vertex. Kept sorted.
    class Matching
    {
    public:
        Matching() = default;

        explicit Matching(std::vector<Edge> edges) :
            _edges(std::move(edges))
        {
            for (auto & e : _edges)
                e = make_edge(e.a, e.b);
            std::sort(_edges.begin(), _edges.end());
            _edges.erase(std::unique(_edges.begin(), _edges.end()), _edges.end());
        }

        static auto from_mates(const std::vector<VertexIndex> & mate) -> Matching
        {
            Matching m;
            for (VertexIndex v = 0; v < static_cast<VertexIndex>(mate.size()); ++v)
                if (mate[v] > v)
                    m._edges.push_back({v, mate[v]});
            return m;
        }

        auto edges() const -> const std::vector<Edge> & { return _edges; }
        auto size() const -> std::size_t { return _edges.size(); }
        auto empty() const -> bool { return _edges.empty(); }

        auto contains(Edge e) const -> bool { return std::binary_search(_edges.begin(), _edges.end(), make_edge(e.a, e.b)); }

        auto mates(VertexIndex n) const -> std::vector<VertexIndex>
        {
            std::vector<VertexIndex> mate(n, no_vertex);
            for (auto & e : _edges) {
                mate.at(e.a) = e.b;
                mate.at(e.b) = e.a;
            }
            return mate;
        }

        auto operator<=>(const Matching &) const = default;

    private:
        std::vector<Edge> _edges;
    };

    /// Throws GameError unless m is a matching inside E.
    inline auto check_matching(const Game & game, const Matching & m) -> void
    {
        std::vector<char> used(game.size(), 0);
        for (auto & e : m.edges()) {
            if (e.a < 0 || e.b >= game.size() || e.a == e.b)
                throw GameError("matching refers to an unknown vertex");
            if (! game.is_edge(e.a, e.b))
                throw GameError("matching edge {" + game.id(e.a) + "," + game.id(e.b) + "} is not a potential edge");
            for (auto v : {e.a, e.b}) {
                if (used[v])
                    throw GameError("vertex '" + game.id(v) + "' is matched twice");
                used[v] = 1;
            }
        }
    }

    inline auto matching_from_ids(const Game & game, const std::vector<std::pair<std::string, std::string>> & pairs) -> Matching
    {
        std::vector<Edge> edges;
        for (auto & [a, b] : pairs)
            edges.push_back(make_edge(game.index_of(a), game.index_of(b)));
        Matching m(std::move(edges));
        check_matching(game, m);
        return m;
    }

    inline auto edge_to_string(const Game & game, Edge e) -> std::string
    {
        return "{" + game.id(e.a) + "," + game.id(e.b) + "}";
    }

    inline auto matching_to_string(const Game & game, const Matching & m) -> std::string
    {
        std::string out;
        for (auto & e : m.edges()) {
            if (! out.empty())
                out += ',';
            out += edge_to_string(game, e);
        }
        return out.empty() ? "{}" : out;
    }
}
