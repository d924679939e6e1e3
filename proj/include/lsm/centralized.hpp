#pragma once

// Centralized analyses: maximum locally stable matchings, independent-set
// reductions in both directions, deferred acceptance, and the linear system
// whose integer points are the locally stable matchings.

#include <lsm/game.hpp>
#include <lsm/io.hpp>
#include <lsm/matching.hpp>
#include <lsm/model.hpp>
#include <lsm/reachability.hpp>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lsm
{
    inline auto max_lsm_bruteforce(const Game & game, std::uint64_t node_limit = 50'000'000) -> Matching
    {
        auto m = max_lsm(game, node_limit);
        if (! m)
            throw GameError("no locally stable matching exists");
        return *m;
    }

    /// Deferred acceptance, U proposing in canonical order along E only. With
    /// tied weights a receiver keeps its current proposer, so no pair strictly
    /// prefers each other at the end.
    inline auto stable_matching_bipartite(const Game & game) -> Matching
    {
        auto sides = game.bipartition();
        if (! sides)
            throw GameError("stable_matching_bipartite needs a bipartite game");
        auto n = game.size();
        std::vector<VertexIndex> mate(n, no_vertex);
        std::vector<std::size_t> next(n, 0);
        std::deque<VertexIndex> free;
        for (VertexIndex v = 0; v < n; ++v)
            if ((*sides)[v] == Side::U)
                free.push_back(v);
        while (! free.empty()) {
            auto u = free.front();
            free.pop_front();
            auto & list = game.ranking(u);
            while (next[u] < list.size()) {
                auto w = list[next[u]++];
                auto cur = mate[w];
                if (cur == no_vertex || game.prefers(w, u, cur)) {
                    mate[w] = u;
                    mate[u] = w;
                    if (cur != no_vertex) {
                        mate[cur] = no_vertex;
                        free.push_front(cur);
                    }
                    break;
                }
            }
        }
        return Matching::from_mates(mate);
    }

    /// No pair of E where both endpoints strictly improve, links ignored.
    inline auto is_globally_stable(const Game & game, const Matching & m) -> bool
    {
        auto mate = m.mates(game.size());
        for (auto & e : game.edges())
            if (mate[e.a] != e.b && detail::improves(game, mate.data(), e.a, e.b) && detail::improves(game, mate.data(), e.b, e.a))
                return false;
        return true;
    }

    struct WeightedGraph
    {
        std::vector<std::string> ids;
        std::vector<std::int64_t> weights;
        std::vector<std::pair<int, int>> edges;

        auto size() const -> int { return static_cast<int>(ids.size()); }

        auto add_vertex(const std::string & id, std::int64_t weight = 1) -> int
        {
            if (weight < 1)
                throw GameError("vertex weights must be at least 1");
            if (std::find(ids.begin(), ids.end(), id) != ids.end())
                throw GameError("duplicate vertex id '" + id + "'");
            ids.push_back(id);
            weights.push_back(weight);
            return size() - 1;
        }

        auto index_of(const std::string & id) const -> int
        {
            auto it = std::find(ids.begin(), ids.end(), id);
            if (it == ids.end())
                throw GameError("unknown vertex '" + id + "'");
            return static_cast<int>(it - ids.begin());
        }

        auto add_edge(int a, int b) -> void
        {
            if (a == b)
                throw GameError("self-loop on '" + ids.at(a) + "'");
            std::pair<int, int> e{std::min(a, b), std::max(a, b)};
            if (std::find(edges.begin(), edges.end(), e) == edges.end())
                edges.push_back(e);
        }

        auto add_edge(const std::string & a, const std::string & b) -> void { add_edge(index_of(a), index_of(b)); }

        auto neighbours(int v) const -> std::vector<int>
        {
            std::vector<int> out;
            for (auto [a, b] : edges) {
                if (a == v)
                    out.push_back(b);
                else if (b == v)
                    out.push_back(a);
            }
            std::sort(out.begin(), out.end());
            return out;
        }

        auto weight_of(const std::vector<int> & set) const -> std::int64_t
        {
            std::int64_t w = 0;
            for (auto v : set)
                w += weights.at(v);
            return w;
        }

        auto independent(const std::vector<int> & set) const -> bool
        {
            std::set<int> s(set.begin(), set.end());
            return std::none_of(edges.begin(), edges.end(), [&](auto & e) { return s.count(e.first) && s.count(e.second); });
        }
    };

    /// `vertex <id> [weight]` and `edge <id> <id>` lines.
    inline auto read_weighted_graph(std::istream & in) -> WeightedGraph
    {
        WeightedGraph g;
        detail::for_each_line(in, [&](const std::vector<std::string> & t, std::size_t line) {
            try {
                if (t[0] == "vertex" && (t.size() == 2 || t.size() == 3))
                    g.add_vertex(t[1], t.size() == 3 ? std::stoll(t[2]) : 1);
                else if (t[0] == "edge" && t.size() == 3)
                    g.add_edge(t[1], t[2]);
                else if (t[0] != "graph")
                    throw ParseError("expected: vertex <id> [weight] | edge <id> <id>", line);
            }
            catch (const ParseError &) {
                throw;
            }
            catch (const std::exception & e) {
                throw ParseError(e.what(), line);
            }
        });
        return g;
    }

    inline auto read_weighted_graph_file(const std::string & path) -> WeightedGraph
    {
        if (path == "-")
            return read_weighted_graph(std::cin);
        auto in = detail::open_input(path);
        return read_weighted_graph(in);
    }

    inline auto write_weighted_graph(std::ostream & out, const WeightedGraph & g) -> void
    {
        out << format_stamp();
        for (int v = 0; v < g.size(); ++v)
            out << "vertex " << g.ids[v] << ' ' << g.weights[v] << "\n";
        for (auto [a, b] : g.edges)
            out << "edge " << g.ids[a] << ' ' << g.ids[b] << "\n";
    }

    /// Branch and bound over vertex index order, inclusion first; among sets of
    /// maximum weight the first one found is returned (sorted indices).
    inline auto max_weighted_is_bruteforce(const WeightedGraph & g) -> std::vector<int>
    {
        if (g.size() > 64)
            throw GuardError("max_weighted_is_bruteforce handles at most 64 vertices");
        auto n = g.size();
        std::vector<std::uint64_t> adj(n, 0);
        for (auto [a, b] : g.edges) {
            adj[a] |= std::uint64_t{1} << b;
            adj[b] |= std::uint64_t{1} << a;
        }
        std::uint64_t best_set = 0;
        std::int64_t best = -1;
        auto rest_weight = [&](std::uint64_t cand) {
            std::int64_t w = 0;
            for (; cand; cand &= cand - 1)
                w += g.weights[std::countr_zero(cand)];
            return w;
        };
        std::function<void(std::uint64_t, std::uint64_t, std::int64_t)> go = [&](std::uint64_t chosen, std::uint64_t cand, std::int64_t w) {
            if (w + rest_weight(cand) <= best)
                return;
            if (! cand) {
                best = w;
                best_set = chosen;
                return;
            }
            auto v = std::countr_zero(cand);
            auto bit = std::uint64_t{1} << v;
            go(chosen | bit, cand & ~bit & ~adj[v], w + g.weights[v]);
            go(chosen, cand & ~bit, w);
        };
        std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
        go(0, all, 0);
        std::vector<int> out;
        for (int v = 0; v < n; ++v)
            if ((best_set >> v) & 1)
                out.push_back(v);
        return out;
    }

    /// Job-market game whose maximum locally stable matching has size |V| + (max independent set size).
    inline auto is_to_jobmarket(const WeightedGraph & g) -> NetworkGame
    {
        NetworkGame game;
        game.name = "independent-set-job-market";
        auto u1 = [&](int v) { return "u1:" + g.ids[v]; };
        auto u2 = [&](int v) { return "u2:" + g.ids[v]; };
        auto w1 = [&](int v) { return "w1:" + g.ids[v]; };
        auto w2 = [&](int v) { return "w2:" + g.ids[v]; };
        for (int v = 0; v < g.size(); ++v) {
            game.add_vertex(u1(v), Side::U, "u_{" + g.ids[v] + ",1}");
            game.add_vertex(u2(v), Side::U, "u_{" + g.ids[v] + ",2}");
            game.add_vertex(w1(v), Side::W, "w_{" + g.ids[v] + ",1}");
            game.add_vertex(w2(v), Side::W, "w_{" + g.ids[v] + ",2}");
        }
        std::set<std::pair<std::string, std::string>> links;
        auto link = [&](const std::string & a, const std::string & b) {
            if (links.insert(std::minmax(a, b)).second)
                game.add_link(a, b);
        };
        for (int v = 0; v < g.size(); ++v)
            for (auto x : g.neighbours(v)) {
                link(w1(v), w2(x));
                link(w2(x), w2(v));
            }
        for (int v = 0; v < g.size(); ++v) {
            auto nb = g.neighbours(v);
            game.add_edge(u1(v), w1(v));
            for (auto x : nb)
                game.add_edge(u1(v), w2(x));
            game.add_edge(u1(v), w2(v));
            game.add_edge(u2(v), w2(v));

            std::vector<std::string> pu{w2(v)};
            for (auto x : nb)
                pu.push_back(w2(x));
            pu.push_back(w1(v));
            game.set_preferences(u1(v), pu);

            std::vector<std::string> pw{u1(v)};
            for (auto x : nb)
                pw.push_back(u1(x));
            pw.push_back(u2(v));
            game.set_preferences(w2(v), pw);
            game.set_preferences(w1(v), {u1(v)});
            game.set_preferences(u2(v), {w2(v)});
        }
        return game;
    }

    /// Conflict graph whose maximum weight is n^2 - n + k for a maximum locally
    /// stable matching of size k, and below n^2 - n when none exists.
    /// Player vertices weigh n-1, edge vertices 2n-1.
    inline auto game_to_weighted_is(const Game & game) -> WeightedGraph
    {
        WeightedGraph g;
        auto n = static_cast<std::int64_t>(game.size());
        auto ne = static_cast<int>(game.edges().size());
        for (VertexIndex v = 0; v < game.size(); ++v)
            g.add_vertex("v:" + game.id(v), std::max<std::int64_t>(n - 1, 1));
        for (auto & e : game.edges())
            g.add_vertex("e:" + game.id(e.a) + ":" + game.id(e.b), 2 * n - 1);
        auto ev = [&](std::int32_t id) { return static_cast<int>(game.size()) + id; };

        // B for an endpoint v matched to w: better partners v sees in (V, L + {v,w})
        auto better_seen = [&](VertexIndex v, VertexIndex w) {
            std::vector<VertexIndex> out;
            for (auto x : game.neighbours(v))
                if (x != w && game.prefers(v, x, w) && (game.near(v, x) || game.is_link(w, x)))
                    out.push_back(x);
            return out;
        };
        auto seen_free = [&](VertexIndex v) {
            std::vector<VertexIndex> out;
            for (auto x : game.neighbours(v))
                if (game.near(v, x))
                    out.push_back(x);
            return out;
        };

        for (std::int32_t i = 0; i < ne; ++i) {
            auto e = game.edge(i);
            g.add_edge(e.a, ev(i));
            g.add_edge(e.b, ev(i));
            for (std::int32_t j = i + 1; j < ne; ++j) {
                auto f = game.edge(j);
                if (e.a == f.a || e.a == f.b || e.b == f.a || e.b == f.b)
                    g.add_edge(ev(i), ev(j));
            }
        }
        for (std::int32_t i = 0; i < ne; ++i) {
            auto e = game.edge(i);
            for (auto [v, w] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}})
                for (auto x : better_seen(v, w)) {
                    g.add_edge(ev(i), x);
                    for (auto id : game.incident(x)) {
                        auto y = game.edge(id).other(x);
                        if (y != v && game.prefers(x, v, y))
                            g.add_edge(ev(i), ev(id));
                    }
                }
        }
        for (VertexIndex v = 0; v < game.size(); ++v)
            for (auto x : seen_free(v)) {
                g.add_edge(v, x);
                for (auto id : game.incident(x)) {
                    auto y = game.edge(id).other(x);
                    if (y != v && game.prefers(x, v, y))
                        g.add_edge(v, ev(id));
                }
            }
        std::sort(g.edges.begin(), g.edges.end());
        return g;
    }

    enum class Relation
    {
        Equal,
        LessEqual
    };

    struct Constraint
    {
        std::string label;
        std::vector<std::pair<int, Rational>> terms;
        Relation relation = Relation::Equal;
        Rational rhs;
    };

    /// Variables are nonnegative.
    struct LinearSystem
    {
        std::vector<std::string> variables;
        std::vector<Constraint> constraints;
    };

    using Assignment = std::map<std::string, Rational>;

    inline auto edge_variable(const Game & game, Edge e) -> std::string { return "x_e:" + game.id(e.a) + ":" + game.id(e.b); }
    inline auto vertex_variable(const Game & game, VertexIndex v) -> std::string { return "x_v:" + game.id(v); }

    /// One balance equation per vertex, one inequality per matched edge and
    /// better neighbour it would see, one per pair of unmatched neighbours that
    /// see each other. Deterministic order.
    inline auto emit_lp(const Game & game) -> LinearSystem
    {
        LinearSystem lp;
        auto ne = static_cast<int>(game.edges().size());
        for (auto & e : game.edges())
            lp.variables.push_back(edge_variable(game, e));
        for (VertexIndex v = 0; v < game.size(); ++v)
            lp.variables.push_back(vertex_variable(game, v));
        auto xv = [&](VertexIndex v) { return ne + v; };

        for (VertexIndex v = 0; v < game.size(); ++v) {
            Constraint c{"balance:" + game.id(v), {}, Relation::Equal, Rational(1)};
            for (auto id : game.incident(v))
                c.terms.emplace_back(id, Rational(1));
            c.terms.emplace_back(xv(v), Rational(1));
            lp.constraints.push_back(std::move(c));
        }

        // x_{v'} plus every edge at v' that v' likes less than u
        auto worse_at = [&](Constraint & c, VertexIndex vp, VertexIndex u) {
            for (auto id : game.incident(vp)) {
                auto up = game.edge(id).other(vp);
                if (game.prefers(vp, u, up))
                    c.terms.emplace_back(id, Rational(1));
            }
            c.terms.emplace_back(xv(vp), Rational(1));
        };

        for (std::int32_t id = 0; id < ne; ++id) {
            auto e = game.edge(id);
            for (auto [u, v] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}})
                for (auto vp : game.neighbours(u)) {
                    if (vp == v || ! game.prefers(u, vp, v) || ! (game.near(u, vp) || game.is_link(v, vp)))
                        continue;
                    Constraint c{"matched:" + game.id(u) + ":" + game.id(v) + ":" + game.id(vp), {}, Relation::LessEqual, Rational(1)};
                    worse_at(c, vp, u);
                    c.terms.emplace_back(id, Rational(1));
                    lp.constraints.push_back(std::move(c));
                }
        }
        for (VertexIndex u = 0; u < game.size(); ++u)
            for (auto vp : game.neighbours(u)) {
                if (! game.near(u, vp))
                    continue;
                Constraint c{"free:" + game.id(u) + ":" + game.id(vp), {}, Relation::LessEqual, Rational(1)};
                worse_at(c, vp, u);
                c.terms.emplace_back(xv(u), Rational(1));
                lp.constraints.push_back(std::move(c));
            }
        return lp;
    }

    inline auto incidence_vector(const Game & game, const Matching & m) -> Assignment
    {
        check_matching(game, m);
        Assignment x;
        auto mate = m.mates(game.size());
        for (auto & e : game.edges())
            x[edge_variable(game, e)] = Rational(m.contains(e) ? 1 : 0);
        for (VertexIndex v = 0; v < game.size(); ++v)
            x[vertex_variable(game, v)] = Rational(mate[v] == no_vertex ? 1 : 0);
        return x;
    }

    /// Label of the first violated constraint ("nonnegative:<var>" for a negative value), if any.
    inline auto first_violation(const LinearSystem & lp, const Assignment & x, const Rational & tol = Rational(0)) -> std::optional<std::string>
    {
        std::vector<Rational> val;
        for (auto & name : lp.variables) {
            auto it = x.find(name);
            if (it == x.end())
                throw GameError("assignment misses variable " + name);
            val.push_back(it->second);
        }
        for (std::size_t i = 0; i < val.size(); ++i)
            if (val[i] < -tol)
                return "nonnegative:" + lp.variables[i];
        for (auto & c : lp.constraints) {
            Rational lhs(0);
            for (auto & [var, coef] : c.terms)
                lhs += coef * val[var];
            auto diff = lhs - c.rhs;
            bool ok = c.relation == Relation::Equal ? (diff <= tol && diff >= -tol) : diff <= tol;
            if (! ok)
                return c.label;
        }
        return std::nullopt;
    }

    inline auto check_feasible(const LinearSystem & lp, const Assignment & x, const Rational & tol = Rational(0)) -> bool
    {
        return ! first_violation(lp, x, tol).has_value();
    }

    /// Calls visit(matching) for every matching inside E; throws past limit.
    template <typename Visit>
    inline auto for_each_matching(const Game & game, Visit && visit, std::uint64_t limit = 5'000'000) -> void
    {
        std::vector<char> used(game.size(), 0);
        std::vector<Edge> chosen;
        std::uint64_t count = 0;
        auto ne = static_cast<std::int32_t>(game.edges().size());
        std::function<void(std::int32_t)> go = [&](std::int32_t from) {
            if (++count > limit)
                throw GuardError("more than " + std::to_string(limit) + " matchings");
            visit(Matching(chosen));
            for (auto id = from; id < ne; ++id) {
                auto e = game.edge(id);
                if (used[e.a] || used[e.b])
                    continue;
                used[e.a] = used[e.b] = 1;
                chosen.push_back(e);
                go(id + 1);
                chosen.pop_back();
                used[e.a] = used[e.b] = 0;
            }
        };
        go(0);
    }

    /// Integer points of the system are exactly the incidence vectors of
    /// locally stable matchings. Integer solutions of the balance equations
    /// are matchings, so every matching is tested in both directions.
    inline auto verify_lp_correspondence(const Game & game, std::uint64_t limit = 5'000'000) -> bool
    {
        auto lp = emit_lp(game);
        bool ok = true;
        for_each_matching(
            game,
            [&](const Matching & m) {
                if (ok && check_feasible(lp, incidence_vector(game, m)) != is_locally_stable(game, m))
                    ok = false;
            },
            limit);
        return ok;
    }

    namespace detail
    {
        inline auto lp_name(std::string s) -> std::string
        {
            static const std::string allowed = "!\"#$%&()/,.;?@_`'{}|~";
            for (auto & c : s) {
                if (c == ':')
                    c = '.';
                else if (! std::isalnum(static_cast<unsigned char>(c)) && allowed.find(c) == std::string::npos)
                    c = '_';
            }
            if (! s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.'))
                s = "_" + s;
            return s;
        }

        inline auto lp_names(const std::vector<std::string> & raw) -> std::vector<std::string>
        {
            std::vector<std::string> out;
            std::set<std::string> used;
            for (auto & r : raw) {
                auto base = lp_name(r), name = base;
                for (int k = 2; used.count(name); ++k)
                    name = base + "~" + std::to_string(k);
                used.insert(name);
                out.push_back(name);
            }
            return out;
        }
    }

    /// CPLEX LP text with a zero objective; `:` in names becomes `.`.
    inline auto write_lp(std::ostream & out, const LinearSystem & lp) -> void
    {
        auto vars = detail::lp_names(lp.variables);
        std::vector<std::string> labels;
        for (auto & c : lp.constraints)
            labels.push_back(c.label);
        auto rows = detail::lp_names(labels);
        out << "\\ " << format_version << "\n";
        out << "Minimize\n obj: 0 " << (vars.empty() ? std::string("dummy") : vars.front()) << "\n";
        out << "Subject To\n";
        for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
            auto & c = lp.constraints[i];
            std::map<int, Rational> merged;
            for (auto & [var, coef] : c.terms)
                merged[var] += coef;
            out << ' ' << rows[i] << ':';
            bool first = true;
            for (auto & [var, coef] : merged) {
                if (coef == Rational(0))
                    continue;
                auto neg = coef < 0;
                auto mag = neg ? -coef : coef;
                out << (first ? (neg ? " -" : " ") : (neg ? " - " : " + "));
                if (mag != Rational(1))
                    out << rational_to_string(mag) << ' ';
                out << vars[var];
                first = false;
            }
            if (first)
                out << " 0 " << vars.front();
            out << (c.relation == Relation::Equal ? " = " : " <= ") << rational_to_string(c.rhs) << "\n";
        }
        out << "End\n";
    }

    /// `<variable> <value>` lines, values as p/q or decimals.
    inline auto read_point(std::istream & in) -> Assignment
    {
        Assignment x;
        detail::for_each_line(in, [&](const std::vector<std::string> & t, std::size_t line) {
            if (t.size() != 2)
                throw ParseError("expected: <variable> <value>", line);
            try {
                if (! x.emplace(t[0], parse_rational(t[1])).second)
                    throw ParseError("variable " + t[0] + " given twice", line);
            }
            catch (const ParseError &) {
                throw;
            }
            catch (const GameError & e) {
                throw ParseError(e.what(), line);
            }
        });
        return x;
    }

    inline auto write_point(std::ostream & out, const Assignment & x) -> void
    {
        out << format_stamp();
        for (auto & [name, value] : x)
            out << name << ' ' << rational_to_string(value) << "\n";
    }

    /// Two applicants, four firms; its polytope has a fractional point that is
    /// not a combination of locally stable matchings. With `as_printed` the
    /// rankings of 1 and 2 are exchanged; that variant makes {1,B},{2,D} unstable
    /// and cuts off the fractional point.
    inline auto polytope_example_game(bool as_printed = false) -> NetworkGame
    {
        NetworkGame g;
        g.name = "polytope-example";
        g.add_vertex("1", Side::U);
        g.add_vertex("2", Side::U);
        for (auto w : {"A", "B", "C", "D"})
            g.add_vertex(w, Side::W);
        g.add_link("1", "2");
        g.add_link("A", "B");
        g.add_link("A", "C");
        g.add_link("B", "D");
        g.add_link("C", "D");
        for (auto u : {"1", "2"})
            for (auto w : {"A", "B", "C", "D"})
                g.add_edge(u, w);
        g.set_preferences("A", {"2", "1"});
        g.set_preferences("B", {"2", "1"});
        g.set_preferences("C", {"1", "2"});
        g.set_preferences("D", {"1", "2"});
        std::vector<std::string> p1{"B", "D", "A", "C"}, p2{"D", "B", "C", "A"};
        if (as_printed)
            std::swap(p1, p2);
        g.set_preferences("1", p1);
        g.set_preferences("2", p2);
        return g;
    }

    /// eps on {1,A}, 1/2 - eps on {1,B}, 1/2 on {1,D}, {2,B}, {2,D}; slacks from the balance equations.
    inline auto polytope_example_point(const Game & game, const Rational & eps) -> Assignment
    {
        std::map<std::pair<std::string, std::string>, Rational> edge_val{
            {{"1", "A"}, eps}, {{"1", "B"}, Rational(1, 2) - eps}, {{"1", "D"}, Rational(1, 2)}, {{"2", "B"}, Rational(1, 2)}, {{"2", "D"}, Rational(1, 2)}};
        Assignment x;
        std::vector<Rational> load(game.size(), Rational(0));
        for (auto & e : game.edges()) {
            auto it = edge_val.find({game.id(e.a), game.id(e.b)});
            auto val = it == edge_val.end() ? Rational(0) : it->second;
            x[edge_variable(game, e)] = val;
            load[e.a] += val;
            load[e.b] += val;
        }
        for (VertexIndex v = 0; v < game.size(); ++v)
            x[vertex_variable(game, v)] = Rational(1) - load[v];
        return x;
    }
}
