#pragma once

// Generators for the constructions used to study reachability: the circling
// gadget, the 3SAT path-and-branching gadget and the reductions built on it,
// memory-defeating gadgets, the exponential-length family and the roommates
// existence reduction.
//
// Where a construction leaves an order unspecified, the canonical order is
// ascending index. Fresh vertex ids are namespaced by role ("uC:2", "b:5",
// "circ:vx:1:B", ...).

#include <lsm/game.hpp>
#include <lsm/io.hpp>
#include <lsm/matching.hpp>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lsm
{
    struct CnfFormula
    {
        int num_vars = 0;
        /// Signed 1-based variable indices; duplicates allowed.
        std::vector<std::array<int, 3>> clauses;

        auto num_clauses() const -> int { return static_cast<int>(clauses.size()); }

        auto validate() const -> void
        {
            if (num_vars < 1)
                throw GameError("formula needs at least one variable");
            if (clauses.empty())
                throw GameError("formula needs at least one clause");
            for (auto & c : clauses)
                for (auto lit : c)
                    if (lit == 0 || std::abs(lit) > num_vars)
                        throw GameError("literal " + std::to_string(lit) + " out of range");
        }

        auto satisfied_by(const std::vector<bool> & assignment) const -> bool
        {
            for (auto & c : clauses) {
                bool sat = false;
                for (auto lit : c)
                    sat = sat || (lit > 0 ? assignment[lit - 1] : ! assignment[-lit - 1]);
                if (! sat)
                    return false;
            }
            return true;
        }

        /// Equisatisfiable formula whose clauses use three distinct variables.
        /// Short clauses are padded with shared fresh variables y, z:
        /// (a | b) becomes (a | b | y)(a | b | -y), (a) becomes the four sign
        /// patterns over y and z. Tautologies are dropped.
        auto with_distinct_variables() const -> CnfFormula
        {
            validate();
            CnfFormula out{num_vars, {}};
            int y = 0, z = 0;
            auto fresh = [&](int & v) {
                if (v == 0)
                    v = ++out.num_vars;
                return v;
            };
            for (auto & c : clauses) {
                std::vector<int> lits;
                bool tautology = false;
                for (auto lit : c) {
                    if (std::find(lits.begin(), lits.end(), -lit) != lits.end())
                        tautology = true;
                    if (std::find(lits.begin(), lits.end(), lit) == lits.end())
                        lits.push_back(lit);
                }
                if (tautology)
                    continue;
                if (lits.size() == 3)
                    out.clauses.push_back({lits[0], lits[1], lits[2]});
                else if (lits.size() == 2)
                    for (int s : {1, -1})
                        out.clauses.push_back({lits[0], lits[1], s * fresh(y)});
                else
                    for (int s : {1, -1})
                        for (int t : {1, -1})
                            out.clauses.push_back({lits[0], s * fresh(y), t * fresh(z)});
            }
            if (out.clauses.empty())
                out.clauses.push_back({fresh(y), fresh(z), ++out.num_vars});
            return out;
        }

        /// Brute force over all assignments.
        auto satisfiable() const -> bool
        {
            for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << num_vars); ++bits) {
                std::vector<bool> a(num_vars);
                for (int i = 0; i < num_vars; ++i)
                    a[i] = (bits >> i) & 1;
                if (satisfied_by(a))
                    return true;
            }
            return false;
        }
    };

    /// DIMACS: `c` comments, `p cnf <vars> <clauses>`, then 0-terminated clauses of exactly three literals.
    inline auto read_cnf(std::istream & in) -> CnfFormula
    {
        CnfFormula f;
        std::optional<int> declared_clauses;
        std::vector<int> pending;
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            std::istringstream ls(line);
            std::string tok;
            if (! (ls >> tok) || tok[0] == 'c' || tok[0] == '%')
                continue;
            if (tok == "p") {
                std::string fmt;
                int k = 0, l = 0;
                if (! (ls >> fmt >> k >> l) || fmt != "cnf")
                    throw ParseError("expected: p cnf <vars> <clauses>", number);
                f.num_vars = k;
                declared_clauses = l;
                continue;
            }
            if (! declared_clauses)
                throw ParseError("clause before the p cnf header", number);
            do {
                int lit = 0;
                try {
                    lit = std::stoi(tok);
                }
                catch (const std::exception &) {
                    throw ParseError("bad literal '" + tok + "'", number);
                }
                if (lit == 0) {
                    if (pending.size() != 3)
                        throw ParseError("clauses must have exactly three literals", number);
                    f.clauses.push_back({pending[0], pending[1], pending[2]});
                    pending.clear();
                }
                else
                    pending.push_back(lit);
            } while (ls >> tok);
        }
        if (! pending.empty())
            throw GameError("unterminated clause at end of CNF input");
        if (! declared_clauses || *declared_clauses != f.num_clauses())
            throw GameError("clause count does not match the p cnf header");
        f.validate();
        return f;
    }

    inline auto read_cnf_file(const std::string & path) -> CnfFormula
    {
        if (path == "-")
            return read_cnf(std::cin);
        auto in = detail::open_input(path);
        return read_cnf(in);
    }

    inline auto write_cnf(std::ostream & out, const CnfFormula & f) -> void
    {
        out << "c " << format_version << "\n";
        out << "p cnf " << f.num_vars << ' ' << f.num_clauses() << "\n";
        for (auto & c : f.clauses)
            out << c[0] << ' ' << c[1] << ' ' << c[2] << " 0\n";
    }

    struct ReductionOutput
    {
        NetworkGame game;
        std::vector<std::pair<std::string, std::string>> init;
        std::optional<std::vector<std::pair<std::string, std::string>>> target;
    };

    namespace detail
    {
        inline auto dedup(std::vector<std::string> v) -> std::vector<std::string>
        {
            std::vector<std::string> out;
            std::set<std::string> seen;
            for (auto & s : v)
                if (seen.insert(s).second)
                    out.push_back(s);
            return out;
        }

        inline auto append(std::vector<std::string> & to, const std::vector<std::string> & from) -> void
        {
            to.insert(to.end(), from.begin(), from.end());
        }

        inline auto idx(const std::string & prefix, int i) -> std::string { return prefix + ":" + std::to_string(i); }

        const std::array<std::string, 4> circ_w{"1", "2", "3", "4"};
        const std::array<std::string, 4> circ_u{"A", "B", "C", "D"};

        inline auto circling_prefs() -> const std::map<std::string, std::vector<std::string>> &
        {
            static const std::map<std::string, std::vector<std::string>> prefs{
                {"1", {"C", "B", "A", "D"}},
                {"2", {"D", "C", "B", "A"}},
                {"3", {"A", "D", "C", "B"}},
                {"4", {"B", "A", "D", "C"}},
                {"A", {"4", "1", "3", "2"}},
                {"B", {"1", "2", "4", "3"}},
                {"C", {"2", "3", "1", "4"}},
                {"D", {"3", "4", "2", "1"}},
            };
            return prefs;
        }

        inline auto circling_links() -> const std::vector<std::pair<std::string, std::string>> &
        {
            static const std::vector<std::pair<std::string, std::string>> links{
                {"A", "b1"}, {"B", "b2"}, {"C", "b3"}, {"D", "b4"},
                {"b1", "1"}, {"b2", "2"}, {"b3", "3"}, {"b4", "4"},
                {"A", "B"}, {"B", "C"}, {"C", "D"}, {"D", "A"},
            };
            return links;
        }

        inline auto side_of(const NetworkGame & g, const std::string & id) -> std::optional<Side>
        {
            for (auto & v : g.vertices)
                if (v.id == id)
                    return v.side;
            throw GameError("unknown vertex '" + id + "'");
        }
    }

    /// The 12-player gadget with two locally stable matchings that no improvement
    /// sequence from a state with an unmatched W-vertex ever reaches.
    inline auto circling_gadget() -> NetworkGame
    {
        NetworkGame g;
        g.name = "circling";
        for (auto & w : detail::circ_w)
            g.add_vertex(w, Side::W, "circling " + w);
        for (auto & u : detail::circ_u)
            g.add_vertex(u, Side::U, "circling " + u);
        for (int i = 1; i <= 4; ++i)
            g.add_vertex("b" + std::to_string(i), Side::U, "circling b" + std::to_string(i));
        for (auto & [a, b] : detail::circling_links())
            g.add_link(a, b);
        for (auto & w : detail::circ_w)
            for (auto & u : detail::circ_u)
                g.add_edge(w, u);
        for (auto & [v, p] : detail::circling_prefs())
            g.set_preferences(v, p);
        return g;
    }

    /// Grafts a fresh copy of the circling gadget whose vertex `1` is `anchor`.
    /// The anchor ranks every gadget vertex below all of its existing options.
    inline auto attach_circling(NetworkGame game, const std::string & anchor) -> NetworkGame
    {
        if (game.correlated())
            throw GameError("attach_circling needs a ranking-mode game");
        auto anchor_side = detail::side_of(game, anchor);
        auto name = [&](const std::string & v) { return v == "1" ? anchor : "circ:" + anchor + ":" + v; };
        auto side_for = [&](bool w_like) -> std::optional<Side> {
            if (! anchor_side)
                return std::nullopt;
            return w_like ? *anchor_side : other_side(*anchor_side);
        };

        for (auto & w : detail::circ_w)
            if (w != "1")
                game.add_vertex(name(w), side_for(true), "circling " + w + " at " + anchor);
        for (auto & u : detail::circ_u)
            game.add_vertex(name(u), side_for(false), "circling " + u + " at " + anchor);
        for (int i = 1; i <= 4; ++i) {
            auto b = "b" + std::to_string(i);
            game.add_vertex(name(b), side_for(false), "circling " + b + " at " + anchor);
        }
        for (auto & [a, b] : detail::circling_links())
            game.add_link(name(a), name(b));
        for (auto & w : detail::circ_w)
            for (auto & u : detail::circ_u)
                game.add_edge(name(w), name(u));
        for (auto & [v, prefs] : detail::circling_prefs()) {
            std::vector<std::string> mapped;
            for (auto & p : prefs)
                mapped.push_back(name(p));
            if (v == "1")
                detail::append(game.preferences[anchor], mapped);
            else
                game.set_preferences(name(v), mapped);
        }
        game.roles[anchor] += (game.roles[anchor].empty() ? "" : "; ") + std::string("circling anchor");
        return game;
    }

    namespace detail
    {
        inline auto lit_id(int lit) -> std::string { return lit > 0 ? idx("x", lit) : idx("nx", -lit); }

        inline auto clause_lits(const CnfFormula & f, int j) -> std::vector<std::string>
        {
            auto & c = f.clauses.at(j - 1);
            return dedup({lit_id(c[0]), lit_id(c[1]), lit_id(c[2])});
        }

        enum class SatVariant
        {
            Plain,
            Thm1,
            Cor2,
            Thm3
        };

        /// Vertices, links and potential edges of the 3SAT gadget plus the
        /// structure a variant adds around `a`. No preferences or weights.
        inline auto threesat_skeleton(const CnfFormula & f, SatVariant variant) -> NetworkGame
        {
            f.validate();
            int k = f.num_vars, l = f.num_clauses();
            bool chain = variant == SatVariant::Thm1 || variant == SatVariant::Thm3;
            NetworkGame g;
            for (int i = 1; i <= k; ++i)
                g.add_vertex(idx("ux", i), Side::U, "u_x" + std::to_string(i));
            for (int j = 1; j <= l; ++j)
                g.add_vertex(idx("uC", j), Side::U, "u_C" + std::to_string(j));
            if (chain)
                for (int h = 1; h <= l + k - 1; ++h)
                    g.add_vertex(idx("b", h), Side::U, "b_" + std::to_string(h));
            g.add_vertex("a", Side::W, "a");
            if (chain)
                g.add_vertex("a1", Side::W, "a_1");
            for (int i = 1; i <= k; ++i) {
                g.add_vertex(idx("x", i), Side::W, "x" + std::to_string(i));
                g.add_vertex(idx("nx", i), Side::W, "not x" + std::to_string(i));
            }
            for (int i = 1; i <= k; ++i)
                g.add_vertex(idx("vx", i), Side::W, "v_x" + std::to_string(i));
            for (int j = 1; j <= l; ++j)
                g.add_vertex(idx("vC", j), Side::W, "v_C" + std::to_string(j));
            if (variant == SatVariant::Cor2) {
                for (int i = 1; i <= k; ++i)
                    g.add_vertex("a:x:" + std::to_string(i), Side::W, "a_x" + std::to_string(i));
                for (int j = 1; j <= l; ++j)
                    g.add_vertex("a:C:" + std::to_string(j), Side::W, "a_C" + std::to_string(j));
            }

            // branching and path
            for (int i = 1; i <= k; ++i) {
                g.add_link("a", idx("x", i));
                g.add_link("a", idx("nx", i));
                g.add_link(idx("x", i), "vx:1");
                g.add_link(idx("nx", i), "vx:1");
            }
            std::vector<std::string> path;
            for (int i = 1; i <= k; ++i)
                path.push_back(idx("vx", i));
            for (int j = 1; j <= l; ++j)
                path.push_back(idx("vC", j));
            for (std::size_t p = 0; p + 1 < path.size(); ++p)
                g.add_link(path[p], path[p + 1]);

            if (chain) {
                g.add_link("a", "a1");
                g.add_link("a1", "uC:1");
                for (int j = 1; j <= l; ++j)
                    g.add_link(idx("uC", j), idx("b", j));
                for (int j = 1; j <= l - 1; ++j)
                    g.add_link(idx("b", j), idx("uC", j + 1));
                g.add_link(idx("b", l), "ux:1");
                for (int i = 1; i <= k - 1; ++i) {
                    g.add_link(idx("ux", i), idx("b", l + i));
                    g.add_link(idx("b", l + i), idx("ux", i + 1));
                }
            }
            if (variant == SatVariant::Cor2) {
                g.add_link("a", "a:x:" + std::to_string(k));
                for (int i = 2; i <= k; ++i)
                    g.add_link("a:x:" + std::to_string(i), "a:x:" + std::to_string(i - 1));
                g.add_link("a:x:1", "a:C:" + std::to_string(l));
                for (int j = 2; j <= l; ++j)
                    g.add_link("a:C:" + std::to_string(j), "a:C:" + std::to_string(j - 1));
            }

            for (int i = 1; i <= k; ++i) {
                g.add_edge(idx("ux", i), "a");
                g.add_edge(idx("ux", i), idx("x", i));
                g.add_edge(idx("ux", i), idx("nx", i));
            }
            for (int j = 1; j <= l; ++j) {
                g.add_edge(idx("uC", j), "a");
                for (auto & lit : clause_lits(f, j))
                    g.add_edge(idx("uC", j), lit);
            }
            for (int i = 1; i <= k; ++i)
                for (int i2 = 1; i2 <= i; ++i2)
                    g.add_edge(idx("ux", i), idx("vx", i2));
            for (int j = 1; j <= l; ++j) {
                for (int i = 1; i <= k; ++i)
                    g.add_edge(idx("uC", j), idx("vx", i));
                for (int j2 = 1; j2 <= j; ++j2)
                    g.add_edge(idx("uC", j), idx("vC", j2));
            }
            if (chain)
                for (int h = 1; h <= l + k - 1; ++h)
                    g.add_edge(idx("b", h), "a");
            if (variant == SatVariant::Cor2) {
                std::vector<std::string> us, as;
                for (int i = 1; i <= k; ++i) {
                    us.push_back(idx("ux", i));
                    as.push_back("a:x:" + std::to_string(i));
                }
                for (int j = 1; j <= l; ++j) {
                    us.push_back(idx("uC", j));
                    as.push_back("a:C:" + std::to_string(j));
                }
                for (auto & u : us)
                    for (auto & a : as)
                        g.add_edge(u, a);
            }
            return g;
        }

        /// General-preference rankings of the 3SAT gadget; with `chain`, `a`
        /// also ranks the b-vertices in their position along the creation chain.
        inline auto set_general_preferences(NetworkGame & g, const CnfFormula & f, bool chain) -> void
        {
            int k = f.num_vars, l = f.num_clauses();
            for (int i = 1; i <= k; ++i) {
                std::vector<std::string> p;
                for (int i2 = i; i2 >= 1; --i2)
                    p.push_back(idx("vx", i2));
                append(p, {idx("x", i), idx("nx", i), "a"});
                g.set_preferences(idx("ux", i), p);
            }
            for (int j = 1; j <= l; ++j) {
                std::vector<std::string> p;
                for (int j2 = j; j2 >= 1; --j2)
                    p.push_back(idx("vC", j2));
                for (int i = k; i >= 1; --i)
                    p.push_back(idx("vx", i));
                append(p, clause_lits(f, j));
                p.push_back("a");
                g.set_preferences(idx("uC", j), p);
            }
            // chain order from the creation point: uC:1, b:1, uC:2, ..., uC:l, b:l, ux:1, b:l+1, ..., ux:k
            std::vector<std::string> chain_order;
            for (int j = 1; j <= l; ++j) {
                chain_order.push_back(idx("uC", j));
                if (chain)
                    chain_order.push_back(idx("b", j));
            }
            for (int i = 1; i <= k; ++i) {
                chain_order.push_back(idx("ux", i));
                if (chain && i < k)
                    chain_order.push_back(idx("b", l + i));
            }
            g.set_preferences("a", std::vector<std::string>(chain_order.rbegin(), chain_order.rend()));
            if (chain)
                for (int h = 1; h <= l + k - 1; ++h)
                    g.set_preferences(idx("b", h), {"a"});
            for (int i = 1; i <= k; ++i) {
                for (auto & lit : {idx("x", i), idx("nx", i)}) {
                    std::vector<std::string> p{idx("ux", i)};
                    for (int j = 1; j <= l; ++j) {
                        auto lits = clause_lits(f, j);
                        if (std::find(lits.begin(), lits.end(), lit) != lits.end())
                            p.push_back(idx("uC", j));
                    }
                    g.set_preferences(lit, p);
                }
                std::vector<std::string> p;
                for (int j = l; j >= 1; --j)
                    p.push_back(idx("uC", j));
                for (int i2 = k; i2 >= i; --i2)
                    p.push_back(idx("ux", i2));
                g.set_preferences(idx("vx", i), p);
            }
            for (int j = 1; j <= l; ++j) {
                std::vector<std::string> p;
                for (int j2 = l; j2 >= j; --j2)
                    p.push_back(idx("uC", j2));
                g.set_preferences(idx("vC", j), p);
            }
        }

        inline auto set_weight(NetworkGame & g, const std::string & a, const std::string & b, Rational w) -> void
        {
            for (auto & e : g.edges)
                if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) {
                    e.weight = w;
                    return;
                }
            throw GameError("no edge {" + a + "," + b + "}");
        }
    }

    /// The bare 3SAT gadget with general preferences; `a` is left as the bottom
    /// option of every u-vertex.
    inline auto threesat_gadget(const CnfFormula & f) -> NetworkGame
    {
        auto g = detail::threesat_skeleton(f, detail::SatVariant::Plain);
        g.name = "threesat";
        detail::set_general_preferences(g, f, false);
        return g;
    }

    /// Correlated target-Reach reduction: from the empty matching, {u_s, v_s} for
    /// all s is reachable iff the formula is satisfiable.
    inline auto reduction_thm1(const CnfFormula & f) -> ReductionOutput
    {
        auto g = detail::threesat_skeleton(f, detail::SatVariant::Thm1);
        g.name = "reach-target-correlated";
        int k = f.num_vars, l = f.num_clauses();
        using detail::idx;
        using detail::set_weight;
        for (int j = 1; j <= l; ++j) {
            set_weight(g, idx("uC", j), "a", Rational(j));
            for (auto & lit : detail::clause_lits(f, j))
                set_weight(g, idx("uC", j), lit, Rational(k + l + 1));
            for (int i = 1; i <= k; ++i)
                set_weight(g, idx("uC", j), idx("vx", i), Rational(k + l + 1 + i));
            for (int j2 = 1; j2 <= j; ++j2)
                set_weight(g, idx("uC", j), idx("vC", j2), Rational(2 * k + l + 1 + j2));
        }
        for (int i = 1; i <= k; ++i) {
            set_weight(g, idx("ux", i), "a", Rational(i + l));
            set_weight(g, idx("ux", i), idx("x", i), Rational(k + l + 1));
            set_weight(g, idx("ux", i), idx("nx", i), Rational(k + l + 1));
            for (int i2 = 1; i2 <= i; ++i2)
                set_weight(g, idx("ux", i), idx("vx", i2), Rational(k + l + 1 + i2));
        }
        for (int h = 1; h <= l + k - 1; ++h)
            set_weight(g, idx("b", h), "a", Rational(2 * h + 1, 2));

        ReductionOutput out{g, {}, std::vector<std::pair<std::string, std::string>>{}};
        for (int i = 1; i <= k; ++i)
            out.target->emplace_back(idx("ux", i), idx("vx", i));
        for (int j = 1; j <= l; ++j)
            out.target->emplace_back(idx("uC", j), idx("vC", j));
        return out;
    }

    /// Correlated job-market variant: every u-vertex is isolated in the links;
    /// reach {u_s, v_s} from {u_s, a_s}.
    inline auto reduction_cor2(const CnfFormula & f) -> ReductionOutput
    {
        auto g = detail::threesat_skeleton(f, detail::SatVariant::Cor2);
        g.name = "reach-target-job-market";
        int k = f.num_vars, l = f.num_clauses();
        using detail::idx;
        using detail::set_weight;
        std::vector<std::string> us;
        for (int i = 1; i <= k; ++i)
            us.push_back(idx("ux", i));
        for (int j = 1; j <= l; ++j)
            us.push_back(idx("uC", j));
        for (auto & u : us) {
            for (int j = 1; j <= l; ++j)
                set_weight(g, u, "a:C:" + std::to_string(j), Rational(j));
            for (int i = 1; i <= k; ++i)
                set_weight(g, u, "a:x:" + std::to_string(i), Rational(l + i));
            set_weight(g, u, "a", Rational(l + k + 1));
        }
        for (int j = 1; j <= l; ++j) {
            for (auto & lit : detail::clause_lits(f, j))
                set_weight(g, idx("uC", j), lit, Rational(k + l + 2));
            for (int i = 1; i <= k; ++i)
                set_weight(g, idx("uC", j), idx("vx", i), Rational(k + l + 2 + i));
            for (int j2 = 1; j2 <= j; ++j2)
                set_weight(g, idx("uC", j), idx("vC", j2), Rational(2 * k + l + 2 + j2));
        }
        for (int i = 1; i <= k; ++i) {
            set_weight(g, idx("ux", i), idx("x", i), Rational(k + l + 2));
            set_weight(g, idx("ux", i), idx("nx", i), Rational(k + l + 2));
            for (int i2 = 1; i2 <= i; ++i2)
                set_weight(g, idx("ux", i), idx("vx", i2), Rational(k + l + 2 + i2));
        }

        ReductionOutput out{g, {}, std::vector<std::pair<std::string, std::string>>{}};
        for (int i = 1; i <= k; ++i) {
            out.init.emplace_back(idx("ux", i), "a:x:" + std::to_string(i));
            out.target->emplace_back(idx("ux", i), idx("vx", i));
        }
        for (int j = 1; j <= l; ++j) {
            out.init.emplace_back(idx("uC", j), "a:C:" + std::to_string(j));
            out.target->emplace_back(idx("uC", j), idx("vC", j));
        }
        return out;
    }

    /// Any-Reach reduction with general preferences: the target structure is
    /// forced by a circling gadget on every v-vertex.
    inline auto reduction_thm3(const CnfFormula & f) -> ReductionOutput
    {
        auto g = detail::threesat_skeleton(f, detail::SatVariant::Thm3);
        g.name = "reach-any-general";
        detail::set_general_preferences(g, f, true);
        for (int i = 1; i <= f.num_vars; ++i)
            g = attach_circling(std::move(g), detail::idx("vx", i));
        for (int j = 1; j <= f.num_clauses(); ++j)
            g = attach_circling(std::move(g), detail::idx("vC", j));
        return ReductionOutput{g, {}, std::nullopt};
    }

    /// Circling gadget where each of 1..4 and A..D first gets a partner it likes
    /// best (u2), which then leaves for its own favourite (u3) and poisons
    /// quality memory.
    inline auto quality_reset_gadget() -> NetworkGame
    {
        auto g = circling_gadget();
        g.name = "quality-reset";
        std::vector<std::string> ws(detail::circ_w.begin(), detail::circ_w.end());
        ws.insert(ws.end(), detail::circ_u.begin(), detail::circ_u.end());
        for (auto & w : ws) {
            auto s = *detail::side_of(g, w);
            auto u1 = "u1:" + w, u2 = "u2:" + w, u3 = "u3:" + w;
            g.add_vertex(u1, other_side(s), "reset u1 of " + w);
            g.add_vertex(u2, other_side(s), "reset u2 of " + w);
            g.add_vertex(u3, s, "reset u3 of " + w);
            g.add_link(w, u1);
            g.add_link(u1, u2);
            g.add_link(w, u3);
            g.add_edge(w, u2);
            g.add_edge(u2, u3);
            auto & p = g.preferences[w];
            p.insert(p.begin(), u2);
            g.set_preferences(u2, {u3, w});
            g.set_preferences(u3, {u2});
        }
        return g;
    }

    /// Circling gadget with partitions swapped (U = {1..4}) and memory meant for W only.
    inline auto recency_w_only_gadget() -> NetworkGame
    {
        auto g = circling_gadget();
        g.name = "recency-w-only";
        for (auto & v : g.vertices)
            v.side = other_side(*v.side);
        g.memory_side = Side::W;
        return g;
    }

    /// Activation gadget plus n rotating gadgets; every End vertex anchors a
    /// circling gadget. Reaching stability from the empty matching takes a
    /// number of steps exponential in n.
    inline auto exponential_gadget(int n) -> NetworkGame
    {
        if (n < 1)
            throw GameError("exponential_gadget needs n >= 1");
        using detail::idx;
        NetworkGame g;
        g.name = "exponential-" + std::to_string(n);
        auto odd = [](int i) { return i % 2 == 1; };
        auto v = [](const std::string & role, int i) { return role + ":" + std::to_string(i); };

        g.add_vertex("A0", Side::U, "A_0");
        g.add_vertex("Dist0", Side::W, "Distribute_0");
        g.add_vertex("End0", Side::W, "End_0");
        for (int i = 1; i <= n; ++i) {
            auto abc = odd(i) ? Side::U : Side::W;
            for (auto role : {"A", "B", "C", "D", "E", "F", "1", "2", "End1", "End2"}) {
                std::string r = role;
                bool first_group = r == "A" || r == "B" || r == "C" || r == "End1" || r == "End2";
                g.add_vertex(v(r, i), first_group ? abc : other_side(abc), r + "_" + std::to_string(i));
            }
        }

        // Distribute_0 is the hub that lets A_0 see every D_i.
        g.add_link("A0", "Dist0");
        for (int i = 1; i <= n; ++i) {
            g.add_link("A0", v("C", i));
            g.add_link("Dist0", v("D", i));
        }
        g.add_link("F:1", "End0");

        auto back = [&](int i) -> std::vector<std::string> {
            if (i == 1)
                return {"A0"};
            return {v("D", i - 1), v("F", i - 1)};
        };
        auto forward = [&](int i) -> std::vector<std::string> {
            if (i == n)
                return {};
            return {v("F", i + 1), v("2", i + 1), v("E", i + 1), v("1", i + 1), v("D", i + 1)};
        };

        for (int i = 1; i <= n; ++i) {
            for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
                     {"A", "B"}, {"D", "E"}, {"E", "F"}, {"F", "D"}, {"D", "1"}, {"1", "E"}, {"E", "2"}, {"2", "F"}, {"A", "End1"}, {"C", "End2"}})
                g.add_link(v(a, i), v(b, i));
            if (i == n) {
                g.add_link(v("A", i), v("C", i));
                g.add_link(v("B", i), v("C", i));
            }
            if (i > 1) {
                g.add_link(v("D", i), v("A", i - 1));
                g.add_link(v("D", i), v("C", i - 1));
                g.add_link(v("F", i), v("B", i - 1));
                g.add_link(v("F", i), v("C", i - 1));
            }
        }

        g.add_edge("A0", "End0");
        for (int i = 1; i <= n; ++i) {
            for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
                     {"A", "E"}, {"A", "F"}, {"B", "D"}, {"B", "E"}, {"C", "F"}, {"C", "D"}, {"F", "End1"}, {"D", "End2"}})
                g.add_edge(v(a, i), v(b, i));
            for (auto & p : back(i))
                for (auto role : {"D", "1", "E", "2", "F"})
                    g.add_edge(v(role, i), p);
            if (i > 1)
                g.add_edge("A0", v("D", i));
        }

        std::vector<std::string> a0{"End0", "F:1", "2:1", "E:1", "1:1"};
        for (int i = 1; i <= n; ++i)
            a0.push_back(v("D", i));
        g.set_preferences("A0", a0);
        g.set_preferences("End0", {"A0"});
        for (int i = 1; i <= n; ++i) {
            auto b = back(i), fw = forward(i);
            g.set_preferences(v("A", i), {v("F", i), v("E", i)});
            g.set_preferences(v("B", i), {v("E", i), v("D", i)});
            g.set_preferences(v("C", i), {v("D", i), v("F", i)});

            std::vector<std::string> d{v("End2", i), v("B", i)};
            detail::append(d, fw);
            d.push_back(v("C", i));
            detail::append(d, b);
            if (i > 1)
                d.push_back("A0");
            g.set_preferences(v("D", i), d);

            std::vector<std::string> e{v("A", i), v("B", i)};
            detail::append(e, b);
            g.set_preferences(v("E", i), e);

            std::vector<std::string> fp{v("End1", i), v("C", i)};
            detail::append(fp, fw);
            fp.push_back(v("A", i));
            detail::append(fp, b);
            g.set_preferences(v("F", i), fp);

            g.set_preferences(v("1", i), b);
            g.set_preferences(v("2", i), b);
            g.set_preferences(v("End1", i), {v("F", i)});
            g.set_preferences(v("End2", i), {v("D", i)});
        }

        g = attach_circling(std::move(g), "End0");
        for (int i = 1; i <= n; ++i) {
            g = attach_circling(std::move(g), v("End1", i));
            g = attach_circling(std::move(g), v("End2", i));
        }
        return g;
    }

    /// Two mirrored copies of a variable/clause structure, every pair allowed to
    /// match; a locally stable matching exists iff the formula is satisfiable.
    /// Clauses with repeated variables are first padded to distinct variables;
    /// otherwise a shared literal vertex makes the clause triangle mutually accessible.
    inline auto roommates_existence_reduction(const CnfFormula & input) -> NetworkGame
    {
        auto f = input.with_distinct_variables();
        using detail::idx;
        int k = f.num_vars, l = f.num_clauses();
        NetworkGame g;
        g.name = "roommates-existence";

        std::vector<std::string> base;
        for (int i = 1; i <= k; ++i)
            for (auto r : {"x", "nx", "1x", "2x", "3x", "4x", "5x"})
                base.push_back(idx(r, i));
        for (int j = 1; j <= l; ++j)
            for (auto r : {"A", "B", "C", "1C", "2C", "3C"})
                base.push_back(idx(r, j));
        auto prime = [](const std::string & s) { return s + "'"; };

        for (auto & b : base)
            g.add_vertex(b, std::nullopt, b);
        for (auto & b : base)
            g.add_vertex(prime(b), std::nullopt, b + " (copy)");

        std::vector<std::pair<std::string, std::string>> links;
        for (int i = 1; i <= k; ++i) {
            std::vector<std::string> chain{idx("x", i), idx("1x", i), idx("2x", i), idx("3x", i), idx("4x", i), idx("5x", i), idx("nx", i)};
            for (std::size_t p = 0; p + 1 < chain.size(); ++p)
                links.emplace_back(chain[p], chain[p + 1]);
        }
        for (int j = 1; j <= l; ++j) {
            auto & c = f.clauses[j - 1];
            auto l1 = detail::lit_id(c[0]), l2 = detail::lit_id(c[1]), l3 = detail::lit_id(c[2]);
            std::vector<std::pair<std::string, std::string>> cl{
                {idx("A", j), idx("1C", j)}, {idx("1C", j), l1}, {l1, idx("B", j)},
                {idx("B", j), idx("2C", j)}, {idx("2C", j), l2}, {l2, idx("C", j)},
                {idx("C", j), idx("3C", j)}, {idx("3C", j), l3}, {l3, idx("A", j)}};
            links.insert(links.end(), cl.begin(), cl.end());
        }
        std::set<std::pair<std::string, std::string>> seen;
        for (auto & [a, b] : links)
            if (seen.insert(std::minmax(a, b)).second) {
                g.add_link(a, b);
                g.add_link(prime(a), prime(b));
            }
        for (auto & b : base)
            g.add_link(b, prime(b));

        for (std::size_t x = 0; x < g.vertices.size(); ++x)
            for (std::size_t y = x + 1; y < g.vertices.size(); ++y)
                g.add_edge(g.vertices[x].id, g.vertices[y].id);

        std::map<std::string, std::vector<std::string>> head;
        std::vector<std::string> clause_vertices;
        for (int j = 1; j <= l; ++j)
            for (auto r : {"A", "B", "C"})
                clause_vertices.push_back(idx(r, j));
        for (int i = 1; i <= k; ++i) {
            for (auto lit : {idx("x", i), idx("nx", i)}) {
                std::vector<std::string> p{idx("3x", i)};
                detail::append(p, clause_vertices);
                head[lit] = p;
            }
            for (auto r : {"1x", "2x", "4x", "5x"})
                head[idx(r, i)] = {idx("3x", i)};
            head[idx("3x", i)] = {idx("x", i), idx("nx", i), idx("1x", i), idx("5x", i), idx("2x", i), idx("4x", i)};
        }
        for (int j = 1; j <= l; ++j) {
            auto & c = f.clauses[j - 1];
            head[idx("A", j)] = {idx("C", j), idx("B", j), detail::lit_id(c[0]), idx("1C", j)};
            head[idx("B", j)] = {idx("A", j), idx("C", j), detail::lit_id(c[1]), idx("2C", j)};
            head[idx("C", j)] = {idx("B", j), idx("A", j), detail::lit_id(c[2]), idx("3C", j)};
            head[idx("1C", j)] = {idx("A", j)};
            head[idx("2C", j)] = {idx("B", j)};
            head[idx("3C", j)] = {idx("C", j)};
        }

        auto complete = [&](const std::string & self, std::vector<std::string> p) {
            p = detail::dedup(std::move(p));
            std::set<std::string> listed(p.begin(), p.end());
            for (auto & v : g.vertices)
                if (v.id != self && ! listed.count(v.id))
                    p.push_back(v.id);
            return p;
        };
        for (auto & b : base) {
            auto h = head.at(b);
            auto p = h;
            p.push_back(prime(b));
            g.set_preferences(b, complete(b, p));
            std::vector<std::string> q;
            for (auto & x : h)
                q.push_back(prime(x));
            q.push_back(b);
            g.set_preferences(prime(b), complete(prime(b), q));
        }
        return g;
    }

    /// Allows every U-W pair to match; options that were not potential edges are
    /// appended at the bottom of each ranking in canonical order.
    inline auto complete_potential_edges(NetworkGame g) -> NetworkGame
    {
        if (g.correlated())
            throw GameError("complete_potential_edges needs a ranking-mode game");
        std::set<std::pair<std::string, std::string>> present;
        for (auto & e : g.edges)
            present.insert(std::minmax(e.a, e.b));
        for (auto & v : g.vertices)
            if (! v.side)
                throw GameError("complete_potential_edges needs partition tags");
        for (auto & u : g.vertices) {
            if (*u.side != Side::U)
                continue;
            for (auto & w : g.vertices) {
                if (*w.side != Side::W || present.count(std::minmax(u.id, w.id)))
                    continue;
                g.add_edge(u.id, w.id);
                g.preferences[u.id];
                g.preferences[w.id];
            }
        }
        std::map<std::string, std::set<std::string>> nbrs;
        for (auto & e : g.edges) {
            nbrs[e.a].insert(e.b);
            nbrs[e.b].insert(e.a);
        }
        for (auto & v : g.vertices) {
            auto & p = g.preferences[v.id];
            std::set<std::string> listed(p.begin(), p.end());
            for (auto & w : g.vertices)
                if (nbrs[v.id].count(w.id) && ! listed.count(w.id))
                    p.push_back(w.id);
            if (p.empty())
                g.preferences.erase(v.id);
        }
        return g;
    }
}
