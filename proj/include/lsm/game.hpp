#pragma once

// Network matching games: players on a fixed link network, potential matching
// edges, and either strict per-player rankings or correlated edge weights.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

namespace lsm
{
    using Rational = boost::rational<std::int64_t>;
    using VertexIndex = std::int32_t;

    inline constexpr VertexIndex no_vertex = -1;

    enum class Side
    {
        U,
        W
    };

    enum class PreferenceMode
    {
        Ranking,
        Correlated
    };

    class GameError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline auto side_name(Side s) -> std::string_view { return s == Side::U ? "U" : "W"; }

    inline auto other_side(Side s) -> Side { return s == Side::U ? Side::W : Side::U; }

    inline auto rational_to_string(const Rational & r) -> std::string
    {
        std::ostringstream out;
        out << r.numerator();
        if (r.denominator() != 1)
            out << '/' << r.denominator();
        return out.str();
    }

    /// Parses "p", "p/q" or a finite decimal such as "2.5".
    inline auto parse_rational(std::string_view text) -> Rational
    {
        auto fail = [&] { return GameError("malformed rational '" + std::string(text) + "'"); };
        auto parse_int = [&](std::string_view s) -> std::int64_t {
            if (s.empty())
                throw fail();
            std::size_t pos = 0;
            bool neg = false;
            if (s[0] == '-' || s[0] == '+') {
                neg = s[0] == '-';
                pos = 1;
            }
            if (pos == s.size())
                throw fail();
            std::int64_t value = 0;
            for (; pos < s.size(); ++pos) {
                if (s[pos] < '0' || s[pos] > '9')
                    throw fail();
                value = value * 10 + (s[pos] - '0');
            }
            return neg ? -value : value;
        };

        if (auto slash = text.find('/'); slash != std::string_view::npos) {
            auto den = parse_int(text.substr(slash + 1));
            if (den == 0)
                throw fail();
            return Rational(parse_int(text.substr(0, slash)), den);
        }
        if (auto dot = text.find('.'); dot != std::string_view::npos) {
            auto frac = text.substr(dot + 1);
            std::int64_t scale = 1;
            for (std::size_t i = 0; i < frac.size(); ++i)
                scale *= 10;
            auto whole = parse_int(text.substr(0, dot).empty() ? std::string_view("0") : text.substr(0, dot));
            auto part = frac.empty() ? 0 : parse_int(frac);
            bool neg = ! text.empty() && text[0] == '-';
            return Rational(whole * scale + (neg ? -part : part), scale);
        }
        return Rational(parse_int(text));
    }

    struct VertexSpec
    {
        std::string id;
        std::optional<Side> side;
    };

    struct LinkSpec
    {
        std::string a, b;
    };

    struct EdgeSpec
    {
        std::string a, b;
        std::optional<Rational> weight;
    };

    /// String-keyed description of a game, as read from a file or produced by
    /// a generator. It may be malformed; validate_game lists the problems and
    /// Game compiles a well-formed one into the indexed form used everywhere else.
    struct NetworkGame
    {
        std::string name = "game";
        std::vector<VertexSpec> vertices;
        std::vector<LinkSpec> links;
        std::vector<EdgeSpec> edges;
        /// Ranking mode only: most preferred first.
        std::map<std::string, std::vector<std::string>> preferences;
        /// Role annotations for generated vertices (not serialised).
        std::map<std::string, std::string> roles;
        /// Partition that carries memory in the construction, if it prescribes one.
        std::optional<Side> memory_side;

        auto add_vertex(std::string id, std::optional<Side> side = std::nullopt, std::string role = {}) -> NetworkGame &
        {
            if (! role.empty())
                roles[id] = std::move(role);
            vertices.push_back({std::move(id), side});
            return *this;
        }

        auto add_link(std::string a, std::string b) -> NetworkGame &
        {
            links.push_back({std::move(a), std::move(b)});
            return *this;
        }

        auto add_edge(std::string a, std::string b, std::optional<Rational> weight = std::nullopt) -> NetworkGame &
        {
            edges.push_back({std::move(a), std::move(b), weight});
            return *this;
        }

        auto set_preferences(const std::string & id, std::vector<std::string> ranking) -> NetworkGame &
        {
            preferences[id] = std::move(ranking);
            return *this;
        }

        auto has_vertex(const std::string & id) const -> bool
        {
            return std::any_of(vertices.begin(), vertices.end(), [&](const VertexSpec & v) { return v.id == id; });
        }

        auto correlated() const -> bool
        {
            return std::any_of(edges.begin(), edges.end(), [](const EdgeSpec & e) { return e.weight.has_value(); });
        }
    };

    /// Returns every invariant violation; empty iff the game is well formed.
    inline auto validate_game(const NetworkGame & game) -> std::vector<std::string>
    {
        std::vector<std::string> errors;
        std::set<std::string> ids;
        std::size_t tagged = 0;
        for (auto & v : game.vertices) {
            if (! ids.insert(v.id).second)
                errors.push_back("duplicate vertex id '" + v.id + "'");
            if (v.side)
                ++tagged;
        }
        if (tagged != 0 && tagged != game.vertices.size())
            errors.push_back("partition tags must be given for all vertices or for none");

        auto check_pair = [&](const std::string & kind, const std::string & a, const std::string & b, std::set<std::pair<std::string, std::string>> & seen) {
            bool ok = true;
            for (auto * id : {&a, &b})
                if (! ids.count(*id)) {
                    errors.push_back("unknown vertex '" + *id + "' in " + kind + " {" + a + "," + b + "}");
                    ok = false;
                }
            if (a == b) {
                errors.push_back("self-loop " + kind + " on '" + a + "'");
                ok = false;
            }
            if (ok && ! seen.insert(std::minmax(a, b)).second)
                errors.push_back("duplicate " + kind + " {" + a + "," + b + "}");
            return ok;
        };

        std::set<std::pair<std::string, std::string>> seen_links, seen_edges;
        for (auto & l : game.links)
            check_pair("link", l.a, l.b, seen_links);

        std::map<std::string, std::set<std::string>> neighbours;
        bool correlated = game.correlated();
        for (auto & e : game.edges) {
            if (check_pair("edge", e.a, e.b, seen_edges)) {
                neighbours[e.a].insert(e.b);
                neighbours[e.b].insert(e.a);
            }
            if (correlated) {
                if (! e.weight)
                    errors.push_back("edge {" + e.a + "," + e.b + "} has no weight in a correlated game");
                else if (*e.weight <= 0)
                    errors.push_back("non-positive weight on edge {" + e.a + "," + e.b + "}");
            }
        }

        if (correlated) {
            if (! game.preferences.empty())
                errors.push_back("rankings given for a correlated (weighted) game");
        }
        else {
            for (auto & [id, ranking] : game.preferences) {
                if (! ids.count(id)) {
                    errors.push_back("ranking for unknown vertex '" + id + "'");
                    continue;
                }
                std::set<std::string> listed;
                auto & nbrs = neighbours[id];
                for (auto & p : ranking) {
                    if (! listed.insert(p).second)
                        errors.push_back("ranking of '" + id + "' is not strict: '" + p + "' listed twice");
                    else if (! nbrs.count(p))
                        errors.push_back("ranking covers non-neighbor: '" + id + "' ranks '" + p + "'");
                }
                for (auto & n : nbrs)
                    if (! listed.count(n))
                        errors.push_back("ranking of '" + id + "' misses neighbor '" + n + "'");
            }
            for (auto & v : game.vertices)
                if (! game.preferences.count(v.id) && ! neighbours[v.id].empty())
                    errors.push_back("missing ranking for vertex '" + v.id + "'");
        }
        return errors;
    }

    /// Unordered vertex pair stored with a < b.
    struct Edge
    {
        VertexIndex a = no_vertex, b = no_vertex;

        auto operator<=>(const Edge &) const = default;

        auto other(VertexIndex v) const -> VertexIndex { return v == a ? b : a; }
        auto contains(VertexIndex v) const -> bool { return v == a || v == b; }
    };

    inline auto make_edge(VertexIndex u, VertexIndex v) -> Edge { return u < v ? Edge{u, v} : Edge{v, u}; }

    /// Compiled, immutable, index-based form of a well-formed NetworkGame.
    /// Vertex indices follow declaration order, which is the canonical order
    /// used for every list this library outputs.
    class Game
    {
    public:
        Game() = default;

        explicit Game(const NetworkGame & spec) :
            _spec(spec)
        {
            auto errors = validate_game(spec);
            if (! errors.empty()) {
                std::string msg = "invalid game '" + spec.name + "':";
                for (auto & e : errors)
                    msg += "\n  " + e;
                throw GameError(msg);
            }

            _n = static_cast<VertexIndex>(spec.vertices.size());
            for (auto & v : spec.vertices) {
                _index.emplace(v.id, static_cast<VertexIndex>(_ids.size()));
                _ids.push_back(v.id);
                _sides.push_back(v.side);
            }
            _mode = spec.correlated() ? PreferenceMode::Correlated : PreferenceMode::Ranking;

            auto nn = static_cast<std::size_t>(_n) * static_cast<std::size_t>(_n);
            _link.assign(nn, 0);
            _near.assign(nn, 0);
            _edge_id.assign(nn, -1);
            _rank.assign(nn, 0);
            _link_adj.resize(_n);
            _nbrs.resize(_n);
            _incident.resize(_n);

            for (auto & l : spec.links) {
                auto a = index_of(l.a), b = index_of(l.b);
                _links.push_back(make_edge(a, b));
                _link[at(a, b)] = _link[at(b, a)] = 1;
                _link_adj[a].push_back(b);
                _link_adj[b].push_back(a);
            }
            std::sort(_links.begin(), _links.end());

            std::vector<std::pair<Edge, Rational>> edges;
            for (auto & e : spec.edges)
                edges.emplace_back(make_edge(index_of(e.a), index_of(e.b)), e.weight.value_or(Rational(0)));
            std::sort(edges.begin(), edges.end(), [](auto & x, auto & y) { return x.first < y.first; });
            for (auto & [e, w] : edges) {
                auto id = static_cast<std::int32_t>(_edges.size());
                _edges.push_back(e);
                _weights.push_back(w);
                _edge_id[at(e.a, e.b)] = _edge_id[at(e.b, e.a)] = id;
                _incident[e.a].push_back(id);
                _incident[e.b].push_back(id);
            }

            for (VertexIndex v = 0; v < _n; ++v) {
                std::sort(_link_adj[v].begin(), _link_adj[v].end());
                _near[at(v, v)] = 0;
                for (auto w : _link_adj[v]) {
                    _near[at(v, w)] = 1;
                    for (auto x : _link_adj[w])
                        if (x != v)
                            _near[at(v, x)] = 1;
                }
            }

            _ranking.resize(_n);
            if (_mode == PreferenceMode::Ranking) {
                for (VertexIndex v = 0; v < _n; ++v) {
                    auto it = spec.preferences.find(_ids[v]);
                    if (it == spec.preferences.end())
                        continue;
                    for (auto & p : it->second)
                        _ranking[v].push_back(index_of(p));
                    auto deg = static_cast<std::int32_t>(_ranking[v].size());
                    for (std::int32_t pos = 0; pos < deg; ++pos)
                        _rank[at(v, _ranking[v][pos])] = deg - pos;
                }
            }
            else {
                for (VertexIndex v = 0; v < _n; ++v) {
                    std::vector<std::pair<Rational, VertexIndex>> opts;
                    for (auto id : _incident[v])
                        opts.emplace_back(_weights[id], _edges[id].other(v));
                    std::stable_sort(opts.begin(), opts.end(), [](auto & x, auto & y) { return x.first > y.first; });
                    std::vector<Rational> levels;
                    for (auto & o : opts)
                        if (levels.empty() || levels.back() != o.first)
                            levels.push_back(o.first);
                    for (auto & [w, p] : opts) {
                        _ranking[v].push_back(p);
                        auto level = std::find(levels.begin(), levels.end(), w) - levels.begin();
                        _rank[at(v, p)] = static_cast<std::int32_t>(levels.size() - level);
                    }
                }
            }

            for (VertexIndex v = 0; v < _n; ++v) {
                for (auto id : _incident[v])
                    _nbrs[v].push_back(_edges[id].other(v));
                std::sort(_nbrs[v].begin(), _nbrs[v].end());
            }
        }

        auto spec() const -> const NetworkGame & { return _spec; }
        auto name() const -> const std::string & { return _spec.name; }
        auto size() const -> VertexIndex { return _n; }
        auto mode() const -> PreferenceMode { return _mode; }
        auto correlated() const -> bool { return _mode == PreferenceMode::Correlated; }

        auto id(VertexIndex v) const -> const std::string & { return _ids.at(v); }
        auto side(VertexIndex v) const -> std::optional<Side> { return _sides.at(v); }
        auto has_partition() const -> bool { return _n > 0 && _sides[0].has_value(); }

        auto contains(const std::string & id) const -> bool { return _index.count(id) != 0; }

        auto index_of(const std::string & id) const -> VertexIndex
        {
            auto it = _index.find(id);
            if (it == _index.end())
                throw GameError("unknown vertex '" + id + "'");
            return it->second;
        }

        auto edges() const -> const std::vector<Edge> & { return _edges; }
        auto links() const -> const std::vector<Edge> & { return _links; }
        auto edge(std::int32_t id) const -> Edge { return _edges.at(id); }
        auto weight(std::int32_t id) const -> const Rational & { return _weights.at(id); }

        /// Edge id of {u,v} in E, or -1.
        auto edge_id(VertexIndex u, VertexIndex v) const -> std::int32_t { return _edge_id[at(u, v)]; }
        auto is_edge(VertexIndex u, VertexIndex v) const -> bool { return _edge_id[at(u, v)] >= 0; }
        auto is_link(VertexIndex u, VertexIndex v) const -> bool { return _link[at(u, v)] != 0; }
        /// Distance at most 2 using links only.
        auto near(VertexIndex u, VertexIndex v) const -> bool { return _near[at(u, v)] != 0; }

        auto link_neighbours(VertexIndex v) const -> const std::vector<VertexIndex> & { return _link_adj.at(v); }
        auto neighbours(VertexIndex v) const -> const std::vector<VertexIndex> & { return _nbrs.at(v); }
        auto incident(VertexIndex v) const -> const std::vector<std::int32_t> & { return _incident.at(v); }
        /// Most preferred first; ties (correlated mode) in canonical order.
        auto ranking(VertexIndex v) const -> const std::vector<VertexIndex> & { return _ranking.at(v); }

        /// Ordinal utility of partner p for v: dense rank among v's options,
        /// higher is better, 0 for no_vertex (unmatched) or non-neighbours.
        auto rank(VertexIndex v, VertexIndex p) const -> std::int32_t { return p == no_vertex ? 0 : _rank[at(v, p)]; }

        /// True iff v strictly prefers a to b (b may be no_vertex).
        auto prefers(VertexIndex v, VertexIndex a, VertexIndex b) const -> bool { return rank(v, a) > rank(v, b); }

        auto max_rank() const -> std::int32_t
        {
            std::int32_t r = 0;
            for (VertexIndex v = 0; v < _n; ++v)
                for (auto p : _nbrs[v])
                    r = std::max(r, rank(v, p));
            return r;
        }

        /// Bipartition if E respects one: tags when given, otherwise a 2-colouring of (V, E).
        auto bipartition() const -> std::optional<std::vector<Side>>
        {
            std::vector<Side> side(_n, Side::U);
            if (has_partition()) {
                for (VertexIndex v = 0; v < _n; ++v)
                    side[v] = *_sides[v];
                for (auto & e : _edges)
                    if (side[e.a] == side[e.b])
                        return std::nullopt;
                return side;
            }
            std::vector<int> colour(_n, -1);
            for (VertexIndex s = 0; s < _n; ++s) {
                if (colour[s] != -1)
                    continue;
                colour[s] = 0;
                std::vector<VertexIndex> stack{s};
                while (! stack.empty()) {
                    auto v = stack.back();
                    stack.pop_back();
                    for (auto w : _nbrs[v]) {
                        if (colour[w] == -1) {
                            colour[w] = 1 - colour[v];
                            stack.push_back(w);
                        }
                        else if (colour[w] == colour[v])
                            return std::nullopt;
                    }
                }
            }
            for (VertexIndex v = 0; v < _n; ++v)
                side[v] = colour[v] == 0 ? Side::U : Side::W;
            return side;
        }

        auto bipartite() const -> bool { return bipartition().has_value(); }

    private:
        auto at(VertexIndex u, VertexIndex v) const -> std::size_t
        {
            return static_cast<std::size_t>(u) * static_cast<std::size_t>(_n) + static_cast<std::size_t>(v);
        }

        NetworkGame _spec;
        VertexIndex _n = 0;
        PreferenceMode _mode = PreferenceMode::Ranking;
        std::vector<std::string> _ids;
        std::vector<std::optional<Side>> _sides;
        std::unordered_map<std::string, VertexIndex> _index;
        std::vector<Edge> _edges, _links;
        std::vector<Rational> _weights;
        std::vector<std::uint8_t> _link, _near;
        std::vector<std::int32_t> _edge_id, _rank;
        std::vector<std::vector<VertexIndex>> _link_adj, _nbrs, _ranking;
        std::vector<std::vector<std::int32_t>> _incident;
    };

    /// Utility of partner for v: position from the bottom of v's ranking, or
    /// the edge weight in a correlated game. Being unmatched is below every value.
    inline auto utility(const Game & game, VertexIndex v, VertexIndex partner) -> Rational
    {
        auto id = game.edge_id(v, partner);
        if (id < 0)
            throw GameError("{" + game.id(v) + "," + game.id(partner) + "} is not a potential edge");
        if (game.correlated())
            return game.weight(id);
        return Rational(game.rank(v, partner));
    }

    inline auto utility(const Game & game, const std::string & v, const std::string & partner) -> Rational
    {
        return utility(game, game.index_of(v), game.index_of(partner));
    }
}
