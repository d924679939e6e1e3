#pragma once

// Improvement-step dynamics: uniformly random scheduling, replay of recorded
// sequences, and the constructive two-phase schedule for recency memory.

#include <lsm/game.hpp>
#include <lsm/io.hpp>
#include <lsm/matching.hpp>
#include <lsm/model.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lsm
{
    struct ImprovementSequence
    {
        Matching initial;
        std::vector<Edge> steps;
        std::optional<std::uint64_t> seed;
    };

    struct RunOutcome
    {
        DynamicsState final;
        std::uint64_t steps_taken = 0;
        bool converged = false;
        std::optional<ImprovementSequence> trace;
    };

    inline constexpr std::uint64_t default_seed = 20130101;
    inline constexpr std::uint64_t default_max_steps = 1'000'000;

    /// Resolves a uniformly chosen local blocking pair until none is left or
    /// max_steps steps were taken. Pair choice and random memory use separate streams.
    inline auto run_random(const Game & game, const Matching & init, const MemoryModel & memory, std::uint64_t seed = default_seed,
        std::uint64_t max_steps = default_max_steps, bool record_trace = false) -> RunOutcome
    {
        RunOutcome out;
        out.final = make_state(game, init, memory, seed);
        if (record_trace)
            out.trace = ImprovementSequence{init, {}, seed};
        std::mt19937_64 pick(seed);
        auto & s = out.final;
        auto mem = [&] { return detail::memory_ptr(s); };
        std::vector<Edge> candidates;
        while (true) {
            candidates.clear();
            for (auto & e : game.edges())
                if (detail::blocking(game, s.mate.data(), mem(), e.a, e.b))
                    candidates.push_back(e);
            if (candidates.empty()) {
                out.converged = true;
                break;
            }
            if (out.steps_taken == max_steps)
                break;
            std::uniform_int_distribution<std::size_t> dist(0, candidates.size() - 1);
            auto e = candidates[dist(pick)];
            detail::apply_unchecked(game, s, e);
            ++out.steps_taken;
            if (record_trace)
                out.trace->steps.push_back(e);
        }
        return out;
    }

    /// Re-executes seq; fails at the first step that is not a local blocking pair.
    inline auto replay(const Game & game, const ImprovementSequence & seq, const MemoryModel & memory) -> RunOutcome
    {
        RunOutcome out;
        out.final = make_state(game, seq.initial, memory, seq.seed.value_or(0));
        for (std::size_t i = 0; i < seq.steps.size(); ++i) {
            if (! is_blocking(game, out.final, seq.steps[i]))
                throw StepError("invalid step at index " + std::to_string(i));
            detail::apply_unchecked(game, out.final, make_edge(seq.steps[i].a, seq.steps[i].b));
            ++out.steps_taken;
        }
        out.converged = is_locally_stable(game, out.final);
        out.trace = seq;
        return out;
    }

    enum class RecencyPhase
    {
        Preparation,
        MemoryRound
    };

    /// Called once after the preparation phase and once per memory-phase round.
    using RecencyObserver = std::function<void(RecencyPhase, const DynamicsState & before, const DynamicsState & after)>;

    /// Upper bound on the two-phase schedule length.
    inline auto two_phase_bound(std::uint64_t nu, std::uint64_t nw) -> std::uint64_t
    {
        return nu * nw + nu * nw * (nw + nu - 1);
    }

    /// Builds a converging sequence under recency memory for a bipartite game
    /// without links inside U. Preparation: the lowest matched u in a blocking
    /// pair moves to its favourite blocking partner. Memory phase: the lowest u
    /// in a blocking pair keeps moving to its favourite blocking partner; then
    /// every edge {u', w} it broke is restored from u''s memory, in deletion
    /// order, unless w ended up with u.
    inline auto two_phase_recency_sequence(const Game & game, const Matching & init, const MemoryScope & scope = MemoryScope::side(Side::U),
        const RecencyObserver & observer = {}) -> ImprovementSequence
    {
        if (! game.has_partition())
            throw GameError("two-phase schedule needs partition tags");
        for (auto & e : game.edges())
            if (game.side(e.a) == game.side(e.b))
                throw GameError("two-phase schedule needs a bipartite game");
        for (auto & l : game.links())
            if (game.side(l.a) == Side::U && game.side(l.b) == Side::U)
                throw GameError("two-phase schedule needs a network without links inside U");
        MemoryModel model{MemoryKind::Recency, scope};
        auto s = make_state(game, init, model);
        for (VertexIndex v = 0; v < game.size(); ++v)
            if (game.side(v) == Side::U && ! s.in_scope[v])
                throw GameError("two-phase schedule needs recency memory on every U-vertex");

        ImprovementSequence seq{init, {}, std::nullopt};
        std::uint64_t nu = 0, nw = 0;
        for (VertexIndex v = 0; v < game.size(); ++v)
            (game.side(v) == Side::U ? nu : nw)++;
        auto limit = 2 * two_phase_bound(nu, nw) + 16;

        auto step = [&](Edge e) {
            if (! is_blocking(game, s, e))
                throw StepError("two-phase schedule produced a non-blocking step " + edge_to_string(game, e));
            detail::apply_unchecked(game, s, e);
            seq.steps.push_back(e);
            if (seq.steps.size() > limit)
                throw StepError("two-phase schedule exceeded its step bound");
        };
        // favourite blocking partner of u, or no_vertex
        auto best_partner = [&](VertexIndex u) {
            VertexIndex best = no_vertex;
            for (auto w : game.neighbours(u))
                if (detail::blocking(game, s.mate.data(), s.memory.data(), u, w) && (best == no_vertex || game.prefers(u, w, best)))
                    best = w;
            return best;
        };

        auto before = s;
        while (true) {
            VertexIndex mover = no_vertex, target = no_vertex;
            for (VertexIndex u = 0; u < game.size() && mover == no_vertex; ++u)
                if (game.side(u) == Side::U && s.mate[u] != no_vertex && (target = best_partner(u)) != no_vertex)
                    mover = u;
            if (mover == no_vertex)
                break;
            step(make_edge(mover, target));
        }
        if (observer)
            observer(RecencyPhase::Preparation, before, s);

        while (true) {
            VertexIndex u = no_vertex;
            for (VertexIndex x = 0; x < game.size() && u == no_vertex; ++x)
                if (game.side(x) == Side::U && best_partner(x) != no_vertex)
                    u = x;
            if (u == no_vertex)
                break;
            before = s;
            std::vector<Edge> deleted;
            for (VertexIndex w; (w = best_partner(u)) != no_vertex;) {
                if (s.mate[w] != no_vertex)
                    deleted.push_back({s.mate[w], w});
                step(make_edge(u, w));
            }
            for (auto & [u2, w] : deleted)
                if (s.mate[w] != u)
                    step(make_edge(u2, w));
            if (observer)
                observer(RecencyPhase::MemoryRound, before, s);
        }
        return seq;
    }

    /// `trace <game> seed <n>`, optional `init <u> <v>` lines, then `step <u> <v>` lines.
    inline auto write_trace(std::ostream & out, const Game & game, const ImprovementSequence & seq) -> void
    {
        out << format_stamp();
        out << "trace " << (game.name().empty() ? "unnamed" : game.name()) << " seed " << seq.seed.value_or(0) << "\n";
        for (auto & e : seq.initial.edges())
            out << "init " << game.id(e.a) << ' ' << game.id(e.b) << "\n";
        for (auto & e : seq.steps)
            out << "step " << game.id(e.a) << ' ' << game.id(e.b) << "\n";
    }

    inline auto read_trace(const Game & game, std::istream & in) -> ImprovementSequence
    {
        ImprovementSequence seq;
        bool header = false;
        std::vector<std::pair<std::string, std::string>> init;
        detail::for_each_line(in, [&](const std::vector<std::string> & t, std::size_t line) {
            if (t[0] == "trace") {
                if (t.size() != 4 || t[2] != "seed")
                    throw ParseError("expected: trace <game> seed <n>", line);
                try {
                    seq.seed = std::stoull(t[3]);
                }
                catch (const std::exception &) {
                    throw ParseError("bad seed", line);
                }
                header = true;
                return;
            }
            if (! header)
                throw ParseError("trace header missing", line);
            if (t.size() != 3 || (t[0] != "step" && t[0] != "init"))
                throw ParseError("expected: step <u> <v>", line);
            if (t[0] == "init") {
                if (! seq.steps.empty())
                    throw ParseError("init after step", line);
                init.emplace_back(t[1], t[2]);
            }
            else {
                auto u = game.index_of(t[1]), v = game.index_of(t[2]);
                if (u == v)
                    throw ParseError("step needs two distinct vertices", line);
                seq.steps.push_back(make_edge(u, v));
            }
        });
        if (! header)
            throw GameError("empty trace");
        seq.initial = matching_from_ids(game, init);
        return seq;
    }
}
