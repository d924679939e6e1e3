#pragma once

// Exact search over the finite space of dynamics states, and exhaustive
// enumeration of locally stable matchings.
//
// The search may expand only a stubborn subset of the enabled steps. A step
// {a,b} reads the mate and memory of a and b, and writes those of a, b and
// their current mates. The subset is closed so that every step outside it
// commutes with every enabled step inside it and cannot enable a disabled step
// inside it. Every path to a locally stable state can then be reordered into a
// path of the same length that uses only stubborn steps, so the set of
// reachable locally stable states and their distances are preserved.
//
// Memory-free searches for any locally stable state also use pendant
// components (see PendantParts) for an admissible lower bound and, where
// exact, to settle a component only after the rest of the game.

#include <lsm/dynamics.hpp>
#include <lsm/game.hpp>
#include <lsm/matching.hpp>
#include <lsm/model.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace lsm
{
    class GuardError : public GameError
    {
    public:
        using GameError::GameError;
    };

    struct SearchConfig
    {
        MemoryModel memory;
        std::uint64_t node_limit = 10'000'000;
        bool record_witness = true;
        /// Expand stubborn subsets only. Exact for the questions answered here.
        bool reduce = true;
    };

    enum class Verdict
    {
        Reachable,
        Unreachable,
        Undetermined
    };

    inline auto verdict_name(Verdict v) -> std::string_view
    {
        switch (v) {
        case Verdict::Reachable: return "reachable";
        case Verdict::Unreachable: return "unreachable";
        case Verdict::Undetermined: return "undetermined";
        }
        return "?";
    }

    struct ReachAnswer
    {
        Verdict verdict = Verdict::Undetermined;
        bool reachable = false;
        std::optional<ImprovementSequence> witness;
        std::optional<std::uint64_t> shortest_length;
        std::uint64_t explored = 0;
        bool exhausted = false;
        std::optional<Matching> reached;
    };

    namespace detail
    {
        /// Open-addressing set of fixed-width keys; returns dense insertion indices.
        class StatePool
        {
        public:
            explicit StatePool(std::size_t words) :
                _w(words), _table(1024, empty), _mask(1023)
            {
            }

            auto size() const -> std::size_t { return _count; }
            auto key(std::uint32_t i) const -> const std::uint64_t * { return _keys.data() + static_cast<std::size_t>(i) * _w; }

            auto insert(const std::uint64_t * k) -> std::pair<std::uint32_t, bool>
            {
                if ((_count + 1) * 2 > _table.size())
                    grow();
                auto h = hash(k) & _mask;
                while (_table[h] != empty) {
                    if (std::memcmp(key(_table[h]), k, _w * sizeof(std::uint64_t)) == 0)
                        return {_table[h], false};
                    h = (h + 1) & _mask;
                }
                auto idx = static_cast<std::uint32_t>(_count++);
                _table[h] = idx;
                _keys.insert(_keys.end(), k, k + _w);
                return {idx, true};
            }

        private:
            static constexpr std::uint32_t empty = 0xffffffffu;

            auto hash(const std::uint64_t * k) const -> std::size_t
            {
                std::uint64_t h = 0x243f6a8885a308d3ULL;
                for (std::size_t i = 0; i < _w; ++i) {
                    h ^= k[i] + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
                    h ^= h >> 31;
                    h *= 0xbf58476d1ce4e5b9ULL;
                }
                h ^= h >> 29;
                return static_cast<std::size_t>(h);
            }

            auto grow() -> void
            {
                std::vector<std::uint32_t> t(_table.size() * 2, empty);
                _mask = t.size() - 1;
                for (std::uint32_t i = 0; i < _count; ++i) {
                    auto h = hash(key(i)) & _mask;
                    while (t[h] != empty)
                        h = (h + 1) & _mask;
                    t[h] = i;
                }
                _table = std::move(t);
            }

            std::size_t _w;
            std::vector<std::uint64_t> _keys;
            std::vector<std::uint32_t> _table;
            std::size_t _mask;
            std::size_t _count = 0;
        };

        struct Work
        {
            std::vector<VertexIndex> mate, recent, earlier, memory;
        };

        /// Packs matchings (edge bitset) and per-vertex memory slots (neighbour positions).
        class StateCodec
        {
        public:
            StateCodec(const Game & game, const MemoryModel & model) :
                _game(game), _kind(model.kind), _fallback(model.recency_fallback)
            {
                if (_kind == MemoryKind::Random)
                    throw GameError("random memory is stochastic and cannot be searched exactly");
                auto n = game.size();
                _in_scope = _kind == MemoryKind::None ? std::vector<char>(n, 0) : model.scope.resolve(game);
                _pos.assign(static_cast<std::size_t>(n) * n, 0);
                for (VertexIndex v = 0; v < n; ++v) {
                    auto & nb = game.neighbours(v);
                    for (std::size_t i = 0; i < nb.size(); ++i)
                        _pos[static_cast<std::size_t>(v) * n + nb[i]] = static_cast<std::uint32_t>(i + 1);
                }
                std::size_t bit = game.edges().size();
                int slots = _kind == MemoryKind::Recency ? (_fallback ? 2 : 1) : (_kind == MemoryKind::Quality ? 1 : 0);
                for (VertexIndex v = 0; v < n; ++v) {
                    if (! _in_scope[v] || slots == 0)
                        continue;
                    auto width = static_cast<int>(std::bit_width(game.neighbours(v).size()));
                    for (int s = 0; s < slots; ++s) {
                        _fields.push_back({v, s, bit, width});
                        bit += width;
                    }
                }
                _words = std::max<std::size_t>(1, (bit + 63) / 64);
            }

            auto words() const -> std::size_t { return _words; }
            auto kind() const -> MemoryKind { return _kind; }
            auto in_scope(VertexIndex v) const -> bool { return _in_scope[v]; }

            auto encode(const Work & w, std::uint64_t * out) const -> void
            {
                std::fill(out, out + _words, 0);
                for (VertexIndex v = 0; v < _game.size(); ++v)
                    if (w.mate[v] > v)
                        set_bits(out, _game.edge_id(v, w.mate[v]), 1, 1);
                for (auto & f : _fields) {
                    auto p = f.slot == 0 ? w.recent[f.v] : w.earlier[f.v];
                    set_bits(out, f.offset, f.width, p == no_vertex ? 0 : _pos[static_cast<std::size_t>(f.v) * _game.size() + p]);
                }
            }

            auto decode(const std::uint64_t * in, Work & w) const -> void
            {
                auto n = _game.size();
                w.mate.assign(n, no_vertex);
                w.recent.assign(n, no_vertex);
                w.earlier.assign(n, no_vertex);
                w.memory.assign(n, no_vertex);
                auto ne = _game.edges().size();
                for (std::size_t word = 0; word * 64 < ne; ++word) {
                    auto bits = in[word];
                    if ((word + 1) * 64 > ne && ne % 64 != 0)
                        bits &= (std::uint64_t{1} << (ne % 64)) - 1;
                    while (bits) {
                        auto id = word * 64 + std::countr_zero(bits);
                        bits &= bits - 1;
                        auto e = _game.edge(static_cast<std::int32_t>(id));
                        w.mate[e.a] = e.b;
                        w.mate[e.b] = e.a;
                    }
                }
                for (auto & f : _fields) {
                    auto p = get_bits(in, f.offset, f.width);
                    auto v = p == 0 ? no_vertex : _game.neighbours(f.v)[p - 1];
                    (f.slot == 0 ? w.recent : w.earlier)[f.v] = v;
                }
                derive_memory(w);
            }

            auto derive_memory(Work & w) const -> void
            {
                for (VertexIndex v = 0; v < _game.size(); ++v) {
                    if (! _in_scope[v])
                        continue;
                    if (_kind == MemoryKind::Recency && _fallback)
                        w.memory[v] = w.recent[v] != w.mate[v] ? w.recent[v] : w.earlier[v];
                    else
                        w.memory[v] = w.recent[v];
                }
            }

            auto memory_ptr(const Work & w) const -> const VertexIndex * { return _kind == MemoryKind::None ? nullptr : w.memory.data(); }

            auto apply(Work & w, Edge e) const -> void
            {
                resolve(w.mate.data(), e.a, e.b, [&](VertexIndex x, VertexIndex old_p, VertexIndex new_p) {
                    if (_in_scope[x])
                        update_memory(_game, _kind, _fallback, x, old_p, new_p, w.memory.data(), w.recent.data(), w.earlier.data());
                });
            }

            auto to_state(const Work & w) const -> DynamicsState
            {
                DynamicsState s;
                s.kind = _kind;
                s.recency_fallback = _fallback;
                s.in_scope = _in_scope;
                s.mate = w.mate;
                s.memory = w.memory;
                s.recent = w.recent;
                s.earlier = w.earlier;
                s.history.assign(_game.size(), {});
                return s;
            }

        private:
            struct Field
            {
                VertexIndex v;
                int slot;
                std::size_t offset;
                int width;
            };

            static auto set_bits(std::uint64_t * out, std::size_t offset, int width, std::uint64_t value) -> void
            {
                for (int i = 0; i < width; ++i)
                    if ((value >> i) & 1)
                        out[(offset + i) / 64] |= std::uint64_t{1} << ((offset + i) % 64);
            }

            static auto get_bits(const std::uint64_t * in, std::size_t offset, int width) -> std::uint64_t
            {
                std::uint64_t v = 0;
                for (int i = 0; i < width; ++i)
                    if ((in[(offset + i) / 64] >> ((offset + i) % 64)) & 1)
                        v |= std::uint64_t{1} << i;
                return v;
            }

            const Game & _game;
            MemoryKind _kind;
            bool _fallback;
            std::vector<char> _in_scope;
            std::vector<std::uint32_t> _pos;
            std::vector<Field> _fields;
            std::size_t _words = 1;
        };

        /// Computes a stubborn subset of the enabled steps at one state.
        class Stubborn
        {
        public:
            /// Edges flagged in ignored are treated as absent.
            Stubborn(const Game & game, bool recency_fallback, std::vector<char> ignored) :
                _game(game), _fallback(recency_fallback), _ignored(std::move(ignored)), _in_set(game.edges().size(), 0), _marked(game.size(), 0)
            {
                // side a of {a,b} matters for access iff some other partner of a is linked to b
                for (auto & e : game.edges()) {
                    auto opens = [&](VertexIndex x, VertexIndex y) {
                        for (auto p : game.neighbours(x))
                            if (p != y && game.is_link(p, y))
                                return true;
                        return false;
                    };
                    _side_a.push_back(opens(e.a, e.b));
                    _side_b.push_back(opens(e.b, e.a));
                }
            }

            /// enabled: per edge id. Returns the chosen enabled edge ids.
            auto choose(const Work & w, const std::vector<char> & enabled, const std::vector<std::int32_t> & enabled_ids) -> std::vector<std::int32_t>
            {
                std::vector<std::int32_t> best;
                std::size_t best_count = enabled_ids.size() + 1;
                for (auto seed : enabled_ids) {
                    auto count = closure(w, enabled, seed, best_count);
                    if (count < best_count) {
                        best_count = count;
                        best.clear();
                        for (auto id : enabled_ids)
                            if (_in_set[id])
                                best.push_back(id);
                    }
                    reset();
                    if (best_count == 1)
                        break;
                }
                return best;
            }

        private:
            auto reset() -> void
            {
                for (auto id : _touched_edges)
                    _in_set[id] = 0;
                for (auto v : _touched_vertices)
                    _marked[v] = 0;
                _touched_edges.clear();
                _touched_vertices.clear();
            }

            /// Number of enabled steps in the closure of seed; stops early at cutoff.
            auto closure(const Work & w, const std::vector<char> & enabled, std::int32_t seed, std::size_t cutoff) -> std::size_t
            {
                std::vector<std::int32_t> stack{seed};
                _in_set[seed] = 1;
                _touched_edges.push_back(seed);
                std::size_t count = 0;
                VertexIndex fp[4];
                while (! stack.empty()) {
                    auto id = stack.back();
                    stack.pop_back();
                    auto e = _game.edge(id);
                    auto ma = w.mate[e.a], mb = w.mate[e.b];
                    int k = 0;
                    if (enabled[id]) {
                        if (++count >= cutoff)
                            return count;
                        fp[k++] = e.a;
                        fp[k++] = e.b;
                        if (ma != no_vertex)
                            fp[k++] = ma;
                        if (mb != no_vertex)
                            fp[k++] = mb;
                    }
                    else if (ma == e.b) {
                        fp[k++] = e.a;
                        fp[k++] = e.b;
                    }
                    else {
                        // any one reason for being disabled will do; take the cheapest
                        VertexIndex best[4];
                        int best_k = 5;
                        auto consider = [&](std::initializer_list<VertexIndex> vs) {
                            VertexIndex cand[4];
                            int ck = 0, fresh = 0;
                            for (auto v : vs)
                                if (v != no_vertex) {
                                    cand[ck++] = v;
                                    fresh += ! _marked[v];
                                }
                            if (fresh < best_k) {
                                best_k = fresh;
                                std::copy(cand, cand + ck, best);
                                k = ck;
                            }
                        };
                        bool a_ok = improves(_game, w.mate.data(), e.a, e.b), b_ok = improves(_game, w.mate.data(), e.b, e.a);
                        if (! a_ok)
                            consider({e.a, ma});
                        if (! b_ok)
                            consider({e.b, mb});
                        if (a_ok && b_ok) {
                            // only mate changes on a side that can ever open a path matter
                            bool ra = _fallback || _side_a[id], rb = _fallback || _side_b[id];
                            consider({ra ? e.a : no_vertex, ra ? ma : no_vertex, rb ? e.b : no_vertex, rb ? mb : no_vertex});
                        }
                        std::copy(best, best + k, fp);
                    }
                    for (int i = 0; i < k; ++i) {
                        auto v = fp[i];
                        if (_marked[v])
                            continue;
                        _marked[v] = 1;
                        _touched_vertices.push_back(v);
                        for (auto other : _game.incident(v))
                            if (! _in_set[other] && ! _ignored[other]) {
                                _in_set[other] = 1;
                                _touched_edges.push_back(other);
                                stack.push_back(other);
                            }
                    }
                }
                return count;
            }

            const Game & _game;
            bool _fallback;
            std::vector<char> _side_a, _side_b;
            std::vector<char> _ignored;
            std::vector<char> _in_set;
            std::vector<char> _marked;
            std::vector<std::int32_t> _touched_edges;
            std::vector<VertexIndex> _touched_vertices;
        };

        /// Pendant components: small vertex sets that touch the rest of the
        /// network (links and edges) only through one anchor vertex. Steps with
        /// an endpoint in a component form disjoint sets across components.
        /// Each component gets an exact local model in which the anchor's
        /// outside partner may change at no cost; local distances in it bound
        /// the number of component steps from below.
        ///
        /// A component is folded when the anchor ranks all outside partners
        /// above all component vertices, the anchor starts outside it, and
        /// postponing all component steps to the end costs no more than the
        /// local lower bound. The rest of the game then does not depend on the
        /// component, since an anchor matched inside looks free from outside.
        class PendantParts
        {
        public:
            static constexpr std::uint32_t unreachable = 0xffffffffu;

            PendantParts(const Game & game, const std::vector<VertexIndex> & init_mate) :
                _game(game), _folded_edge(game.edges().size(), 0)
            {
                auto n = game.size();
                std::vector<std::vector<VertexIndex>> adj(n);
                for (VertexIndex v = 0; v < n; ++v) {
                    adj[v] = game.link_neighbours(v);
                    for (auto p : game.neighbours(v))
                        adj[v].push_back(p);
                }
                struct Candidate
                {
                    VertexIndex anchor;
                    std::vector<VertexIndex> part;
                };
                std::vector<Candidate> candidates;
                std::vector<int> comp(n);
                for (VertexIndex x = 0; x < n; ++x) {
                    std::fill(comp.begin(), comp.end(), -1);
                    comp[x] = -2;
                    for (VertexIndex s = 0; s < n; ++s) {
                        if (comp[s] != -1)
                            continue;
                        std::vector<VertexIndex> part{s};
                        comp[s] = 0;
                        for (std::size_t i = 0; i < part.size(); ++i)
                            for (auto y : adj[part[i]])
                                if (comp[y] == -1) {
                                    comp[y] = 0;
                                    part.push_back(y);
                                }
                        if (part.size() >= 2 && part.size() <= max_part && part.size() + 1 < static_cast<std::size_t>(n))
                            candidates.push_back({x, std::move(part)});
                    }
                }
                std::stable_sort(candidates.begin(), candidates.end(), [](auto & a, auto & b) { return a.part.size() > b.part.size(); });
                std::vector<char> taken(n, 0), anchor(n, 0);
                for (auto & c : candidates) {
                    if (taken[c.anchor] || std::any_of(c.part.begin(), c.part.end(), [&](VertexIndex v) { return taken[v] || anchor[v]; }))
                        continue;
                    if (build(c.anchor, c.part, init_mate)) {
                        for (auto v : c.part)
                            taken[v] = 1;
                        anchor[c.anchor] = 1;
                    }
                }
                for (auto & p : _parts)
                    if (p.folded) {
                        _fold_floor += std::min(p.cost_blocked, p.cost_free);
                        for (auto v : p.local)
                            if (v != p.anchor)
                                for (auto id : game.incident(v))
                                    _folded_edge[id] = 1;
                    }
            }

            auto empty() const -> bool { return _parts.empty(); }
            auto any_folded() const -> bool { return _fold_floor != unreachable && std::any_of(_parts.begin(), _parts.end(), [](auto & p) { return p.folded; }); }

            /// Edges inside folded components; the search never takes them.
            auto folded_edges() const -> const std::vector<char> & { return _folded_edge; }

            /// Lower bound on the remaining steps (folded components included).
            auto bound(const std::vector<VertexIndex> & mate) const -> std::uint32_t
            {
                std::uint64_t total = _fold_floor;
                for (auto & p : _parts) {
                    if (p.folded)
                        continue;
                    auto d = p.to_any[p.state_of(_game, mate)];
                    if (d == unreachable)
                        return unreachable;
                    total += d;
                }
                return total >= unreachable ? unreachable : static_cast<std::uint32_t>(total);
            }

            /// Cost of settling every folded component once the rest is stable at mate.
            auto completion(const std::vector<VertexIndex> & mate) const -> std::uint32_t
            {
                std::uint64_t total = 0;
                for (auto & p : _parts)
                    if (p.folded)
                        total += p.blocked(mate) ? p.cost_blocked : p.cost_free;
                return total >= unreachable ? unreachable : static_cast<std::uint32_t>(total);
            }

            /// Appends the postponed component steps to steps and applies them to mate.
            auto complete(std::vector<VertexIndex> & mate, std::vector<Edge> & steps) const -> void
            {
                for (auto & p : _parts) {
                    if (! p.folded)
                        continue;
                    for (auto e : p.blocked(mate) ? p.path_blocked : p.path_free) {
                        resolve(mate.data(), e.a, e.b, [](VertexIndex, VertexIndex, VertexIndex) {});
                        steps.push_back(e);
                    }
                }
            }

        private:
            static constexpr std::size_t max_part = 16;
            static constexpr std::size_t max_states = 50'000;

            struct Part
            {
                VertexIndex anchor;
                std::vector<VertexIndex> local;
                std::vector<char> inside;
                std::map<std::int32_t, VertexIndex> rep_of_rank;
                std::map<std::vector<VertexIndex>, std::uint32_t> index;
                std::vector<std::uint32_t> to_any;
                bool folded = false;
                std::uint32_t cost_blocked = unreachable, cost_free = unreachable;
                std::vector<Edge> path_blocked, path_free;

                auto blocked(const std::vector<VertexIndex> & mate) const -> bool { return mate[anchor] != no_vertex && ! inside[mate[anchor]]; }

                auto state_of(const Game & game, const std::vector<VertexIndex> & mate) const -> std::uint32_t
                {
                    std::vector<VertexIndex> key;
                    for (auto v : local) {
                        auto m = mate[v];
                        if (v == anchor && m != no_vertex && ! inside[m])
                            m = rep_of_rank.at(game.rank(v, m));
                        key.push_back(m);
                    }
                    return index.at(key);
                }
            };

            auto build(VertexIndex x, const std::vector<VertexIndex> & part, const std::vector<VertexIndex> & init_mate) -> bool
            {
                auto n = _game.size();
                Part p;
                p.anchor = x;
                p.local = part;
                p.local.push_back(x);
                std::sort(p.local.begin(), p.local.end());
                p.inside.assign(n, 0);
                for (auto v : p.local)
                    p.inside[v] = 1;
                std::vector<Edge> local_edges;
                for (auto v : p.local)
                    for (auto y : _game.neighbours(v))
                        if (v < y && p.inside[y])
                            local_edges.push_back({v, y});
                if (local_edges.empty())
                    return false;
                for (auto y : _game.neighbours(x))
                    if (! p.inside[y])
                        p.rep_of_rank.emplace(_game.rank(x, y), y);
                std::vector<VertexIndex> statuses{no_vertex};
                for (auto & [r, y] : p.rep_of_rank)
                    statuses.push_back(y);

                // every local matching, combined with every outside status of a free anchor
                std::vector<std::vector<VertexIndex>> states;
                std::vector<VertexIndex> mate(n, no_vertex);
                auto key_of = [&] {
                    std::vector<VertexIndex> k;
                    for (auto v : p.local)
                        k.push_back(mate[v]);
                    return k;
                };
                bool overflow = false;
                std::function<void(std::size_t)> enumerate = [&](std::size_t i) {
                    if (overflow)
                        return;
                    if (i == local_edges.size()) {
                        if (mate[x] != no_vertex)
                            states.push_back(key_of());
                        else {
                            for (auto s : statuses) {
                                mate[x] = s;
                                states.push_back(key_of());
                            }
                            mate[x] = no_vertex;
                        }
                        overflow = states.size() > max_states;
                        return;
                    }
                    enumerate(i + 1);
                    auto e = local_edges[i];
                    if (mate[e.a] == no_vertex && mate[e.b] == no_vertex) {
                        mate[e.a] = e.b;
                        mate[e.b] = e.a;
                        enumerate(i + 1);
                        mate[e.a] = mate[e.b] = no_vertex;
                    }
                };
                enumerate(0);
                if (overflow)
                    return false;
                for (std::uint32_t i = 0; i < states.size(); ++i)
                    p.index.emplace(states[i], i);

                auto load = [&](const std::vector<VertexIndex> & k) {
                    for (std::size_t i = 0; i < p.local.size(); ++i)
                        mate[p.local[i]] = k[i];
                    if (mate[x] != no_vertex && ! p.inside[mate[x]])
                        mate[mate[x]] = x;
                };
                auto unload = [&] {
                    if (mate[x] != no_vertex && ! p.inside[mate[x]])
                        mate[mate[x]] = no_vertex;
                    for (auto v : p.local)
                        mate[v] = no_vertex;
                };
                auto outside = [&](std::uint32_t i) {
                    auto m = states[i][std::find(p.local.begin(), p.local.end(), x) - p.local.begin()];
                    return m != no_vertex && ! p.inside[m];
                };

                // steps[i]: local steps (cost 1); zero[i]: anchor status changes (cost 0)
                std::vector<std::vector<std::pair<std::uint32_t, Edge>>> steps(states.size());
                std::vector<std::vector<std::uint32_t>> zero(states.size());
                std::vector<char> stable(states.size(), 1);
                for (std::uint32_t i = 0; i < states.size(); ++i) {
                    load(states[i]);
                    for (auto e : local_edges) {
                        if (! blocking(_game, mate.data(), nullptr, e.a, e.b))
                            continue;
                        stable[i] = 0;
                        auto before = mate;
                        resolve(mate.data(), e.a, e.b, [](VertexIndex, VertexIndex, VertexIndex) {});
                        steps[i].push_back({p.index.at(key_of()), e});
                        mate = std::move(before);
                    }
                    auto own = mate[x];
                    if (own != no_vertex)
                        mate[own] = no_vertex;
                    for (auto s : statuses) {
                        mate[x] = s;
                        zero[i].push_back(p.index.at(key_of()));
                    }
                    mate[x] = own;
                    if (own != no_vertex)
                        mate[own] = x;
                    unload();
                }

                // relaxed distances to stable states satisfying accept
                auto relaxed = [&](auto accept) {
                    std::vector<std::vector<std::pair<std::uint32_t, std::uint8_t>>> rev(states.size());
                    for (std::uint32_t i = 0; i < states.size(); ++i) {
                        for (auto & [j, e] : steps[i])
                            rev[j].push_back({i, 1});
                        for (auto j : zero[i])
                            rev[j].push_back({i, 0});
                    }
                    std::vector<std::uint32_t> dist(states.size(), unreachable);
                    std::deque<std::uint32_t> queue;
                    for (std::uint32_t i = 0; i < states.size(); ++i)
                        if (stable[i] && accept(i)) {
                            dist[i] = 0;
                            queue.push_back(i);
                        }
                    while (! queue.empty()) {
                        auto i = queue.front();
                        queue.pop_front();
                        for (auto [j, cost] : rev[i])
                            if (dist[i] + cost < dist[j]) {
                                dist[j] = dist[i] + cost;
                                cost == 0 ? queue.push_front(j) : queue.push_back(j);
                            }
                    }
                    return dist;
                };
                p.to_any = relaxed([](std::uint32_t) { return true; });

                // folding needs a dominant outside, an untouched start, and matching bounds
                bool dominant = true;
                for (auto y : _game.neighbours(x))
                    for (auto z : _game.neighbours(x))
                        if (! p.inside[y] && p.inside[z] && _game.rank(x, y) <= _game.rank(x, z))
                            dominant = false;
                bool untouched = init_mate[x] == no_vertex || ! p.inside[init_mate[x]];
                for (auto v : p.local)
                    if (v != x && init_mate[v] != no_vertex)
                        untouched = false;
                if (dominant && untouched && ! p.rep_of_rank.empty()) {
                    // local start with the anchor free, and with the anchor held outside
                    std::vector<VertexIndex> start(p.local.size(), no_vertex);
                    auto start_free = p.index.at(start);
                    start[std::find(p.local.begin(), p.local.end(), x) - p.local.begin()] = p.rep_of_rank.begin()->second;
                    auto start_blocked = p.index.at(start);
                    auto init_state = init_mate[x] == no_vertex ? start_free : start_blocked;
                    auto low_blocked = relaxed([&](std::uint32_t i) { return outside(i); })[init_state];
                    auto low_free = relaxed([&](std::uint32_t i) { return ! outside(i); })[init_state];
                    // fixed-status schedules: plain BFS over local steps only
                    auto schedule = [&](std::uint32_t from, std::vector<Edge> & path) {
                        std::vector<std::uint32_t> parent(states.size(), unreachable);
                        std::vector<Edge> via(states.size());
                        std::deque<std::uint32_t> queue{from};
                        parent[from] = from;
                        while (! queue.empty()) {
                            auto i = queue.front();
                            queue.pop_front();
                            if (stable[i]) {
                                for (auto at = i; at != from; at = parent[at])
                                    path.push_back(via[at]);
                                std::reverse(path.begin(), path.end());
                                return static_cast<std::uint32_t>(path.size());
                            }
                            for (auto & [j, e] : steps[i])
                                if (parent[j] == unreachable) {
                                    parent[j] = i;
                                    via[j] = e;
                                    queue.push_back(j);
                                }
                        }
                        return unreachable;
                    };
                    p.cost_blocked = schedule(start_blocked, p.path_blocked);
                    p.cost_free = schedule(start_free, p.path_free);
                    p.folded = p.cost_blocked == low_blocked && p.cost_free == low_free;
                }
                _parts.push_back(std::move(p));
                return true;
            }

            const Game & _game;
            std::vector<Part> _parts;
            std::vector<char> _folded_edge;
            std::uint32_t _fold_floor = 0;
        };

        /// Best-first search from init in order of steps taken plus a lower
        /// bound on the remaining steps (plain breadth-first when the bound is
        /// off). goal(work, has_enabled) is tested when a state is expanded.
        /// With fold set the goal must be "no enabled step"; folded components
        /// are then settled after the rest, at the cost fixed per final state.
        template <typename Goal>
        auto search(const Game & game, const Matching & init, const SearchConfig & cfg, bool reduce, bool bound, bool fold, Goal && goal) -> ReachAnswer
        {
            if (cfg.node_limit == 0)
                throw GameError("node_limit must be positive");
            check_matching(game, init);
            StateCodec codec(game, cfg.memory);
            StatePool pool(codec.words());
            std::optional<PendantParts> parts;
            if (bound && cfg.memory.kind == MemoryKind::None) {
                parts.emplace(game, init.mates(game.size()));
                if (parts->empty())
                    parts.reset();
            }
            fold = fold && parts && parts->any_folded();
            std::vector<char> masked = fold ? parts->folded_edges() : std::vector<char>(game.edges().size(), 0);
            Stubborn stubborn(game, cfg.memory.kind == MemoryKind::Recency && cfg.memory.recency_fallback, masked);
            std::vector<std::uint32_t> parent, depth, estimate;
            std::vector<std::int32_t> via;
            std::vector<char> closed;
            std::vector<std::vector<std::uint32_t>> buckets, finals;
            auto push = [&](std::vector<std::vector<std::uint32_t>> & into, std::size_t f, std::uint32_t idx) {
                if (into.size() <= f)
                    into.resize(f + 1);
                into[f].push_back(idx);
            };
            auto lower = [&](const Work & w) -> std::uint32_t { return parts ? parts->bound(w.mate) : 0; };

            Work w;
            w.mate = init.mates(game.size());
            w.recent.assign(game.size(), no_vertex);
            w.earlier.assign(game.size(), no_vertex);
            w.memory.assign(game.size(), no_vertex);
            std::vector<std::uint64_t> key(codec.words());
            codec.encode(w, key.data());
            pool.insert(key.data());
            parent.push_back(0);
            via.push_back(-1);
            depth.push_back(0);
            estimate.push_back(lower(w));
            closed.push_back(0);

            ReachAnswer answer;
            auto succeed = [&](std::uint32_t at_state) {
                codec.decode(pool.key(at_state), w);
                std::vector<Edge> steps;
                for (auto at = at_state; at != 0; at = parent[at])
                    steps.push_back(game.edge(via[at]));
                std::reverse(steps.begin(), steps.end());
                if (fold)
                    parts->complete(w.mate, steps);
                answer.verdict = Verdict::Reachable;
                answer.reachable = true;
                answer.reached = Matching::from_mates(w.mate);
                answer.shortest_length = steps.size();
                if (cfg.record_witness)
                    answer.witness = ImprovementSequence{init, std::move(steps), std::nullopt};
                answer.explored = pool.size();
                return answer;
            };
            if (estimate[0] != PendantParts::unreachable)
                push(buckets, estimate[0], 0);
            std::vector<char> enabled(game.edges().size(), 0);
            std::vector<std::int32_t> enabled_ids;
            Work next;
            for (std::size_t f = 0; f < std::max(buckets.size(), finals.size()); ++f) {
                if (f < finals.size() && ! finals[f].empty())
                    return succeed(finals[f].back());
                while (f < buckets.size() && ! buckets[f].empty()) {
                    auto cur = buckets[f].back();
                    buckets[f].pop_back();
                    if (closed[cur] || depth[cur] + estimate[cur] != f)
                        continue;
                    closed[cur] = 1;
                    codec.decode(pool.key(cur), w);
                    enabled_ids.clear();
                    auto mem = codec.memory_ptr(w);
                    for (std::int32_t id = 0; id < static_cast<std::int32_t>(game.edges().size()); ++id) {
                        auto e = game.edge(id);
                        enabled[id] = ! masked[id] && blocking(game, w.mate.data(), mem, e.a, e.b);
                        if (enabled[id])
                            enabled_ids.push_back(id);
                    }
                    if (goal(w, ! enabled_ids.empty())) {
                        if (! fold)
                            return succeed(cur);
                        auto rest = parts->completion(w.mate);
                        if (rest != PendantParts::unreachable) {
                            auto total = static_cast<std::size_t>(depth[cur]) + rest;
                            if (total == f)
                                return succeed(cur);
                            push(finals, total, cur);
                        }
                        continue;
                    }
                    const auto & expand = reduce && enabled_ids.size() > 1 ? stubborn.choose(w, enabled, enabled_ids) : enabled_ids;
                    for (auto id : expand) {
                        next = w;
                        codec.apply(next, game.edge(id));
                        codec.encode(next, key.data());
                        auto [idx, fresh] = pool.insert(key.data());
                        if (fresh) {
                            parent.push_back(cur);
                            via.push_back(id);
                            depth.push_back(depth[cur] + 1);
                            estimate.push_back(lower(next));
                            closed.push_back(0);
                            if (estimate[idx] != PendantParts::unreachable)
                                push(buckets, depth[idx] + estimate[idx], idx);
                            if (pool.size() > cfg.node_limit) {
                                answer.exhausted = true;
                                answer.explored = pool.size();
                                return answer;
                            }
                        }
                        else if (! closed[idx] && depth[cur] + 1 < depth[idx] && estimate[idx] != PendantParts::unreachable) {
                            parent[idx] = cur;
                            via[idx] = id;
                            depth[idx] = depth[cur] + 1;
                            push(buckets, depth[idx] + estimate[idx], idx);
                        }
                    }
                }
            }
            answer.verdict = Verdict::Unreachable;
            answer.explored = pool.size();
            return answer;
        }
    }

    /// Is some locally stable state reachable from init?
    inline auto decide_reach_any(const Game & game, const Matching & init, const SearchConfig & cfg = {}) -> ReachAnswer
    {
        return detail::search(game, init, cfg, cfg.reduce, cfg.reduce, cfg.reduce, [](const detail::Work &, bool has_enabled) { return ! has_enabled; });
    }

    /// Is a state whose matching equals target reachable from init? The
    /// reduction is used only when target is locally stable without memory
    /// and the search is memory-free, so that success means a deadlock.
    inline auto decide_reach_target(const Game & game, const Matching & init, const Matching & target, const SearchConfig & cfg = {}) -> ReachAnswer
    {
        check_matching(game, target);
        auto goal_mates = target.mates(game.size());
        bool reduce = cfg.reduce && cfg.memory.kind == MemoryKind::None && is_locally_stable(game, target);
        return detail::search(game, init, cfg, reduce, reduce, false, [&](const detail::Work & w, bool) { return w.mate == goal_mates; });
    }

    /// Minimum number of steps to a locally stable state, or nullopt if none is
    /// reachable. Throws GuardError when the node limit is hit.
    inline auto shortest_to_stability(const Game & game, const Matching & init, const SearchConfig & cfg = {}) -> std::optional<std::uint64_t>
    {
        auto a = decide_reach_any(game, init, cfg);
        if (a.exhausted)
            throw GuardError("node limit exceeded after " + std::to_string(a.explored) + " states");
        return a.shortest_length;
    }

    /// Backtracking over vertices (fewest remaining options first). A pair is
    /// checked for blocking once both endpoints are decided; earlier, a decided
    /// vertex that wants an undecided neighbour it already sees forces that
    /// neighbour to end up with something at least as good.
    class LsmSearch
    {
    public:
        explicit LsmSearch(const Game & game, std::uint64_t node_limit = 50'000'000) :
            _game(game), _limit(node_limit)
        {
        }

        /// visit(mate) returns false to stop. min_pairs prunes branches that cannot reach that size.
        auto run(const std::function<bool(const std::vector<VertexIndex> &)> & visit, std::size_t min_pairs = 0) -> void
        {
            auto n = _game.size();
            _mate.assign(n, undecided);
            _need.assign(n, -1);
            _trail.clear();
            _nodes = 0;
            _pairs = 0;
            _undecided = n;
            _min_pairs = min_pairs;
            _stop = false;
            _visit = &visit;
            recurse();
        }

        auto set_min_pairs(std::size_t m) -> void { _min_pairs = m; }
        auto nodes() const -> std::uint64_t { return _nodes; }

    private:
        static constexpr VertexIndex undecided = -2;

        auto allowed(VertexIndex x, VertexIndex y) const -> bool
        {
            return _mate[y] == undecided && _game.rank(x, y) > _need[x] && _game.rank(y, x) > _need[y];
        }

        auto domain_size(VertexIndex x, std::size_t cap) const -> std::size_t
        {
            std::size_t d = _need[x] < 0 ? 1 : 0;
            for (auto y : _game.neighbours(x))
                if (allowed(x, y) && ++d >= cap)
                    break;
            return d;
        }

        auto raise(VertexIndex y, std::int32_t level) -> void
        {
            if (level <= _need[y])
                return;
            _trail.push_back({y, _need[y]});
            _need[y] = level;
        }

        /// Checks pairs around a newly decided z and propagates floors.
        auto settle(VertexIndex z) -> bool
        {
            auto mz = _mate[z];
            for (auto y : _game.neighbours(z)) {
                if (y == mz)
                    continue;
                if (_mate[y] != undecided) {
                    if (detail::blocking(_game, _mate.data(), nullptr, z, y))
                        return false;
                }
                else if (_game.rank(z, y) > _game.rank(z, mz) && (_game.near(z, y) || (mz != no_vertex && _game.is_link(mz, y))))
                    raise(y, _game.rank(y, z) - 1);
            }
            return true;
        }

        auto recurse() -> void
        {
            if (_stop)
                return;
            if (++_nodes > _limit)
                throw GuardError("locally stable matching search exceeded " + std::to_string(_limit) + " nodes");
            if (_pairs + static_cast<std::size_t>(_undecided) / 2 < _min_pairs)
                return;
            if (_undecided == 0) {
                if (! (*_visit)(_mate))
                    _stop = true;
                return;
            }
            VertexIndex x = no_vertex;
            std::size_t best = SIZE_MAX;
            for (VertexIndex v = 0; v < _game.size(); ++v) {
                if (_mate[v] != undecided)
                    continue;
                auto d = domain_size(v, best);
                if (d < best) {
                    best = d;
                    x = v;
                    if (d == 0)
                        return;
                }
            }
            std::vector<VertexIndex> options;
            for (auto y : _game.ranking(x))
                if (allowed(x, y))
                    options.push_back(y);
            if (_need[x] < 0)
                options.push_back(no_vertex);
            for (auto y : options) {
                auto mark = _trail.size();
                _mate[x] = y;
                --_undecided;
                if (y != no_vertex) {
                    _mate[y] = x;
                    --_undecided;
                    ++_pairs;
                }
                if (settle(x) && (y == no_vertex || settle(y)))
                    recurse();
                while (_trail.size() > mark) {
                    _need[_trail.back().first] = _trail.back().second;
                    _trail.pop_back();
                }
                _mate[x] = undecided;
                ++_undecided;
                if (y != no_vertex) {
                    _mate[y] = undecided;
                    ++_undecided;
                    --_pairs;
                }
                if (_stop)
                    return;
            }
        }

        const Game & _game;
        std::uint64_t _limit;
        std::vector<VertexIndex> _mate;
        std::vector<std::int32_t> _need;
        std::vector<std::pair<VertexIndex, std::int32_t>> _trail;
        std::uint64_t _nodes = 0;
        std::size_t _pairs = 0;
        VertexIndex _undecided = 0;
        std::size_t _min_pairs = 0;
        bool _stop = false;
        const std::function<bool(const std::vector<VertexIndex> &)> * _visit = nullptr;
    };

    /// All memory-free locally stable matchings, in canonical order.
    inline auto enumerate_lsm(const Game & game, std::uint64_t node_limit = 50'000'000) -> std::vector<Matching>
    {
        std::vector<Matching> out;
        LsmSearch search(game, node_limit);
        search.run([&](const std::vector<VertexIndex> & mate) {
            out.push_back(Matching::from_mates(mate));
            return true;
        });
        std::sort(out.begin(), out.end());
        return out;
    }

    inline auto find_lsm(const Game & game, std::uint64_t node_limit = 50'000'000) -> std::optional<Matching>
    {
        std::optional<Matching> found;
        LsmSearch search(game, node_limit);
        search.run([&](const std::vector<VertexIndex> & mate) {
            found = Matching::from_mates(mate);
            return false;
        });
        return found;
    }

    /// A largest locally stable matching (canonically first among ties), or nullopt if none exists.
    inline auto max_lsm(const Game & game, std::uint64_t node_limit = 50'000'000) -> std::optional<Matching>
    {
        std::optional<Matching> best;
        LsmSearch search(game, node_limit);
        search.run([&](const std::vector<VertexIndex> & mate) {
            auto m = Matching::from_mates(mate);
            if (! best || m.size() > best->size() || (m.size() == best->size() && m < *best)) {
                best = m;
                search.set_min_pairs(m.size());
            }
            return true;
        });
        return best;
    }
}
