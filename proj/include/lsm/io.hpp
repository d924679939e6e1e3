#pragma once

// Line-oriented text formats for games and matchings. '#' starts a comment.

#include <lsm/game.hpp>
#include <lsm/matching.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace lsm
{
    inline constexpr std::string_view format_version = "lsm-format 1";

    inline auto format_stamp() -> std::string { return "# " + std::string(format_version) + "\n"; }

    class ParseError : public GameError
    {
    public:
        ParseError(const std::string & what, std::size_t line) :
            GameError("line " + std::to_string(line) + ": " + what)
        {
        }
    };

    namespace detail
    {
        inline auto tokens(const std::string & line) -> std::vector<std::string>
        {
            std::vector<std::string> out;
            std::istringstream in(line);
            std::string t;
            while (in >> t) {
                if (t[0] == '#')
                    break;
                out.push_back(t);
            }
            return out;
        }

        template <typename LineFn>
        inline auto for_each_line(std::istream & in, LineFn && fn) -> void
        {
            std::string line;
            std::size_t number = 0;
            while (std::getline(in, line)) {
                ++number;
                auto t = tokens(line);
                if (! t.empty())
                    fn(t, number);
            }
        }

        inline auto open_input(const std::string & path) -> std::ifstream
        {
            std::ifstream in(path);
            if (! in)
                throw GameError("cannot open '" + path + "'");
            return in;
        }
    }

    /// Reads `game`, `vertex`, `link`, `edge [weight p/q]` and `pref id : ...` lines.
    /// Well-formedness beyond syntax is left to validate_game, except that a file
    /// mixing weights and rankings is rejected here.
    inline auto read_game(std::istream & in) -> NetworkGame
    {
        NetworkGame g;
        bool saw_weight = false, saw_pref = false;
        detail::for_each_line(in, [&](const std::vector<std::string> & t, std::size_t line) {
            const auto & kw = t[0];
            if (kw == "game") {
                if (t.size() < 2)
                    throw ParseError("game needs a name", line);
                g.name = t[1];
                for (std::size_t i = 2; i < t.size(); ++i)
                    g.name += " " + t[i];
            }
            else if (kw == "vertex") {
                if (t.size() != 2 && t.size() != 3)
                    throw ParseError("expected: vertex <id> [U|W]", line);
                std::optional<Side> side;
                if (t.size() == 3) {
                    if (t[2] == "U")
                        side = Side::U;
                    else if (t[2] == "W")
                        side = Side::W;
                    else
                        throw ParseError("partition tag must be U or W", line);
                }
                g.add_vertex(t[1], side);
            }
            else if (kw == "link") {
                if (t.size() != 3)
                    throw ParseError("expected: link <id> <id>", line);
                g.add_link(t[1], t[2]);
            }
            else if (kw == "edge") {
                if (t.size() == 3)
                    g.add_edge(t[1], t[2]);
                else if (t.size() == 5 && t[3] == "weight") {
                    saw_weight = true;
                    try {
                        g.add_edge(t[1], t[2], parse_rational(t[4]));
                    }
                    catch (const GameError & e) {
                        throw ParseError(e.what(), line);
                    }
                }
                else
                    throw ParseError("expected: edge <id> <id> [weight <p/q>]", line);
            }
            else if (kw == "pref") {
                if (t.size() < 3 || t[2] != ":")
                    throw ParseError("expected: pref <id> : <id> ...", line);
                saw_pref = true;
                if (g.preferences.count(t[1]))
                    throw ParseError("second pref line for '" + t[1] + "'", line);
                g.preferences[t[1]] = std::vector<std::string>(t.begin() + 3, t.end());
            }
            else
                throw ParseError("unknown directive '" + kw + "'", line);
            if (saw_weight && saw_pref)
                throw ParseError("file mixes weight and pref lines", line);
        });
        return g;
    }

    inline auto read_game_file(const std::string & path) -> NetworkGame
    {
        if (path == "-")
            return read_game(std::cin);
        auto in = detail::open_input(path);
        return read_game(in);
    }

    inline auto write_game(std::ostream & out, const NetworkGame & g) -> void
    {
        out << format_stamp();
        out << "game " << g.name << "\n";
        if (g.memory_side)
            out << "# memory-scope " << side_name(*g.memory_side) << "\n";
        for (auto & v : g.vertices) {
            out << "vertex " << v.id;
            if (v.side)
                out << ' ' << side_name(*v.side);
            out << "\n";
        }
        for (auto & l : g.links)
            out << "link " << l.a << ' ' << l.b << "\n";
        for (auto & e : g.edges) {
            out << "edge " << e.a << ' ' << e.b;
            if (e.weight)
                out << " weight " << rational_to_string(*e.weight);
            out << "\n";
        }
        if (! g.correlated())
            for (auto & v : g.vertices) {
                auto it = g.preferences.find(v.id);
                if (it == g.preferences.end())
                    continue;
                out << "pref " << v.id << " :";
                for (auto & p : it->second)
                    out << ' ' << p;
                out << "\n";
            }
    }

    inline auto game_to_text(const NetworkGame & g) -> std::string
    {
        std::ostringstream out;
        write_game(out, g);
        return out.str();
    }

    /// `match <id> <id>` lines.
    inline auto read_matching(std::istream & in) -> std::vector<std::pair<std::string, std::string>>
    {
        std::vector<std::pair<std::string, std::string>> pairs;
        detail::for_each_line(in, [&](const std::vector<std::string> & t, std::size_t line) {
            if (t.size() != 3 || t[0] != "match")
                throw ParseError("expected: match <id> <id>", line);
            pairs.emplace_back(t[1], t[2]);
        });
        return pairs;
    }

    inline auto read_matching_file(const Game & game, const std::string & path) -> Matching
    {
        if (path == "empty")
            return {};
        auto in = detail::open_input(path);
        return matching_from_ids(game, read_matching(in));
    }

    inline auto write_matching(std::ostream & out, const Game & game, const Matching & m) -> void
    {
        out << format_stamp();
        for (auto & e : m.edges())
            out << "match " << game.id(e.a) << ' ' << game.id(e.b) << "\n";
    }
}
