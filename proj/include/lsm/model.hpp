#pragma once

// Accessibility, local blocking pairs, memory models and local improvement steps.

#include <lsm/game.hpp>
#include <lsm/matching.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace lsm
{
    enum class MemoryKind
    {
        None,
        Random,
        Recency,
        Quality
    };

    inline auto memory_kind_name(MemoryKind k) -> std::string_view
    {
        switch (k) {
        case MemoryKind::None: return "none";
        case MemoryKind::Random: return "random";
        case MemoryKind::Recency: return "recency";
        case MemoryKind::Quality: return "quality";
        }
        return "?";
    }

    inline auto parse_memory_kind(std::string_view s) -> MemoryKind
    {
        if (s == "none") return MemoryKind::None;
        if (s == "random") return MemoryKind::Random;
        if (s == "recency") return MemoryKind::Recency;
        if (s == "quality") return MemoryKind::Quality;
        throw GameError("unknown memory model '" + std::string(s) + "'");
    }

    /// Which vertices have a memory slot.
    class MemoryScope
    {
    public:
        static auto all() -> MemoryScope { return MemoryScope{}; }

        static auto side(Side s) -> MemoryScope
        {
            MemoryScope m;
            m._side = s;
            return m;
        }

        static auto vertices(std::set<std::string> ids) -> MemoryScope
        {
            MemoryScope m;
            m._ids = std::move(ids);
            return m;
        }

        static auto nobody() -> MemoryScope { return vertices({}); }

        auto resolve(const Game & game) const -> std::vector<char>
        {
            std::vector<char> in(game.size(), 1);
            if (_side) {
                if (! game.has_partition())
                    throw GameError("memory scoped to a partition but the game has no partition tags");
                for (VertexIndex v = 0; v < game.size(); ++v)
                    in[v] = *game.side(v) == *_side;
            }
            else if (_ids) {
                for (auto & id : *_ids)
                    game.index_of(id);
                for (VertexIndex v = 0; v < game.size(); ++v)
                    in[v] = _ids->count(game.id(v)) != 0;
            }
            return in;
        }

        auto describe() const -> std::string
        {
            if (_side)
                return std::string(side_name(*_side));
            if (_ids)
                return "custom(" + std::to_string(_ids->size()) + ")";
            return "all";
        }

    private:
        std::optional<Side> _side;
        std::optional<std::set<std::string>> _ids;
    };

    /// One remembered partner per vertex in scope. With recency_fallback a
    /// vertex that rematches with its remembered partner falls back to the
    /// distinct partner before it instead of remembering nobody.
    struct MemoryModel
    {
        MemoryKind kind = MemoryKind::None;
        MemoryScope scope = MemoryScope::all();
        bool recency_fallback = false;
    };

    enum class Channel
    {
        LinkPath,
        MatchingPath,
        Memory
    };

    inline auto channel_name(Channel c) -> std::string_view
    {
        switch (c) {
        case Channel::LinkPath: return "link-path";
        case Channel::MatchingPath: return "matching-path";
        case Channel::Memory: return "memory";
        }
        return "?";
    }

    struct BlockingPair
    {
        Edge pair;
        Channel channel = Channel::LinkPath;

        auto operator<=>(const BlockingPair &) const = default;
    };

    class StepError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Matching plus per-vertex memory. `memory` is what the vertex currently
    /// remembers. Recency keeps the last departed partner in `recent` (and the
    /// distinct one before it in `earlier` under the fallback rule); Quality
    /// keeps its best departed partner in `recent`.
    struct DynamicsState
    {
        MemoryKind kind = MemoryKind::None;
        bool recency_fallback = false;
        std::vector<char> in_scope;
        std::vector<VertexIndex> mate;
        std::vector<VertexIndex> memory;
        std::vector<VertexIndex> recent;
        std::vector<VertexIndex> earlier;
        /// Sorted set of departed partners, per vertex.
        std::vector<std::vector<VertexIndex>> history;
        std::uint64_t rng_seed = 0;
        std::mt19937_64 rng;

        auto matching() const -> Matching { return Matching::from_mates(mate); }

        auto operator==(const DynamicsState & o) const -> bool
        {
            return kind == o.kind && recency_fallback == o.recency_fallback && in_scope == o.in_scope && mate == o.mate && memory == o.memory && recent == o.recent
                && earlier == o.earlier && history == o.history && rng_seed == o.rng_seed && rng == o.rng;
        }
    };

    inline auto make_state(const Game & game, const Matching & init, const MemoryModel & model = {}, std::uint64_t seed = 0) -> DynamicsState
    {
        check_matching(game, init);
        DynamicsState s;
        s.kind = model.kind;
        s.recency_fallback = model.recency_fallback;
        s.in_scope = model.kind == MemoryKind::None ? std::vector<char>(game.size(), 0) : model.scope.resolve(game);
        s.mate = init.mates(game.size());
        s.memory.assign(game.size(), no_vertex);
        s.recent.assign(game.size(), no_vertex);
        s.earlier.assign(game.size(), no_vertex);
        s.history.assign(game.size(), {});
        s.rng_seed = seed;
        s.rng.seed(seed ^ 0x9e3779b97f4a7c15ULL);
        return s;
    }

    namespace detail
    {
        /// dist(u, v) <= 2 in (V, L u M) with M given by mate.
        inline auto accessible(const Game & game, const VertexIndex * mate, VertexIndex u, VertexIndex v) -> bool
        {
            if (game.near(u, v))
                return true;
            auto mu = mate[u], mv = mate[v];
            if (mu != no_vertex && (mu == v || game.is_link(mu, v)))
                return true;
            return mv != no_vertex && game.is_link(u, mv);
        }

        inline auto remembers(const VertexIndex * memory, VertexIndex u, VertexIndex v) -> bool
        {
            return memory && (memory[u] == v || memory[v] == u);
        }

        inline auto improves(const Game & game, const VertexIndex * mate, VertexIndex u, VertexIndex v) -> bool
        {
            return game.rank(u, v) > game.rank(u, mate[u]);
        }

        /// {u,v} must be a potential edge. memory may be null.
        inline auto blocking(const Game & game, const VertexIndex * mate, const VertexIndex * memory, VertexIndex u, VertexIndex v) -> bool
        {
            return mate[u] != v && improves(game, mate, u, v) && improves(game, mate, v, u)
                && (accessible(game, mate, u, v) || remembers(memory, u, v));
        }

        inline auto channel(const Game & game, const VertexIndex * mate, VertexIndex u, VertexIndex v) -> Channel
        {
            if (game.near(u, v))
                return Channel::LinkPath;
            if (accessible(game, mate, u, v))
                return Channel::MatchingPath;
            return Channel::Memory;
        }

        /// Memory bookkeeping for v whose partner changes from old_p to new_p.
        inline auto update_memory(const Game & game, MemoryKind kind, bool fallback, VertexIndex v, VertexIndex old_p, VertexIndex new_p,
            VertexIndex * memory, VertexIndex * recent, VertexIndex * earlier) -> void
        {
            switch (kind) {
            case MemoryKind::Recency:
                if (fallback) {
                    if (old_p != no_vertex && old_p != recent[v]) {
                        earlier[v] = recent[v];
                        recent[v] = old_p;
                    }
                    memory[v] = recent[v] != new_p ? recent[v] : earlier[v];
                }
                else {
                    // rematching with the remembered partner leaves nothing to remember
                    if (old_p != no_vertex)
                        recent[v] = old_p;
                    if (recent[v] == new_p)
                        recent[v] = no_vertex;
                    memory[v] = recent[v];
                }
                break;
            case MemoryKind::Quality:
                if (old_p != no_vertex && (recent[v] == no_vertex || game.prefers(v, old_p, recent[v])))
                    recent[v] = old_p;
                memory[v] = recent[v];
                break;
            case MemoryKind::None:
            case MemoryKind::Random:
                break;
            }
        }

        /// Creates {u,v}, dropping the edges incident to u and v. Calls
        /// changed(x, old, new) for every vertex whose partner changed.
        template <typename Changed>
        inline auto resolve(VertexIndex * mate, VertexIndex u, VertexIndex v, Changed && changed) -> void
        {
            auto mu = mate[u], mv = mate[v];
            if (mu != no_vertex) {
                mate[mu] = no_vertex;
                changed(mu, u, no_vertex);
            }
            if (mv != no_vertex) {
                mate[mv] = no_vertex;
                changed(mv, v, no_vertex);
            }
            mate[u] = v;
            mate[v] = u;
            changed(u, mu, v);
            changed(v, mv, u);
        }

        inline auto insert_sorted(std::vector<VertexIndex> & set, VertexIndex x) -> void
        {
            auto it = std::lower_bound(set.begin(), set.end(), x);
            if (it == set.end() || *it != x)
                set.insert(it, x);
        }

        /// In-place step without validation.
        inline auto apply_unchecked(const Game & game, DynamicsState & s, Edge pair) -> void
        {
            resolve(s.mate.data(), pair.a, pair.b, [&](VertexIndex x, VertexIndex old_p, VertexIndex new_p) {
                if (old_p != no_vertex)
                    insert_sorted(s.history[x], old_p);
                if (s.in_scope[x])
                    update_memory(game, s.kind, s.recency_fallback, x, old_p, new_p, s.memory.data(), s.recent.data(), s.earlier.data());
            });
            if (s.kind == MemoryKind::Random) {
                for (VertexIndex x = 0; x < game.size(); ++x) {
                    if (! s.in_scope[x] || s.history[x].empty())
                        continue;
                    std::uniform_int_distribution<std::size_t> pick(0, s.history[x].size() - 1);
                    s.memory[x] = s.history[x][pick(s.rng)];
                }
            }
        }

        inline auto memory_ptr(const DynamicsState & s) -> const VertexIndex *
        {
            return s.kind == MemoryKind::None ? nullptr : s.memory.data();
        }
    }

    /// dist(u, v) <= 2 in (V, L u M).
    inline auto accessible(const Game & game, const Matching & m, VertexIndex u, VertexIndex v) -> bool
    {
        if (u == v)
            throw GameError("accessible: u and v must differ");
        if (u < 0 || v < 0 || u >= game.size() || v >= game.size())
            throw GameError("accessible: unknown vertex");
        auto mate = m.mates(game.size());
        return detail::accessible(game, mate.data(), u, v);
    }

    inline auto accessible(const Game & game, const Matching & m, const std::string & u, const std::string & v) -> bool
    {
        return accessible(game, m, game.index_of(u), game.index_of(v));
    }

    /// Accessible through the network, or because either endpoint remembers the other.
    inline auto accessible_with_memory(const Game & game, const DynamicsState & s, VertexIndex u, VertexIndex v) -> bool
    {
        if (u == v)
            throw GameError("accessible_with_memory: u and v must differ");
        if (u < 0 || v < 0 || u >= game.size() || v >= game.size())
            throw GameError("accessible_with_memory: unknown vertex");
        return detail::accessible(game, s.mate.data(), u, v) || detail::remembers(detail::memory_ptr(s), u, v);
    }

    /// All local blocking pairs of the state, in canonical edge order.
    inline auto local_blocking_pairs(const Game & game, const DynamicsState & s) -> std::vector<BlockingPair>
    {
        std::vector<BlockingPair> out;
        auto mem = detail::memory_ptr(s);
        for (auto & e : game.edges())
            if (detail::blocking(game, s.mate.data(), mem, e.a, e.b))
                out.push_back({e, detail::channel(game, s.mate.data(), e.a, e.b)});
        return out;
    }

    inline auto is_locally_stable(const Game & game, const DynamicsState & s) -> bool
    {
        auto mem = detail::memory_ptr(s);
        return std::none_of(game.edges().begin(), game.edges().end(),
            [&](const Edge & e) { return detail::blocking(game, s.mate.data(), mem, e.a, e.b); });
    }

    /// Memory-free local stability of a plain matching.
    inline auto is_locally_stable(const Game & game, const Matching & m) -> bool
    {
        return is_locally_stable(game, make_state(game, m));
    }

    inline auto is_blocking(const Game & game, const DynamicsState & s, Edge pair) -> bool
    {
        if (pair.a < 0 || pair.b < 0 || pair.a >= game.size() || pair.b >= game.size() || ! game.is_edge(pair.a, pair.b))
            return false;
        return detail::blocking(game, s.mate.data(), detail::memory_ptr(s), pair.a, pair.b);
    }

    /// Resolves one local blocking pair and returns the successor state.
    inline auto apply_step(const Game & game, const DynamicsState & s, Edge pair) -> DynamicsState
    {
        if (! is_blocking(game, s, pair))
            throw StepError("pair is not currently a local blocking pair");
        DynamicsState next = s;
        detail::apply_unchecked(game, next, make_edge(pair.a, pair.b));
        return next;
    }

    inline auto apply_step(const Game & game, const DynamicsState & s, const BlockingPair & pair) -> DynamicsState
    {
        return apply_step(game, s, pair.pair);
    }
}
