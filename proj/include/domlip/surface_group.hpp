#pragma once

// Genus-g surface group presentation: generators a1,b1,...,ag,bg with the
// single relator [a1,b1]...[ag,bg]. Words live in the free group on the
// generators; letters are signed indices (+k for generator k-1, -k for its
// inverse, k = 1..2g).

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "domlip/errors.hpp"

namespace domlip {

struct Word {
    std::vector<int> letters; // nonzero signed generator indices, 1-based

    Word() = default;
    explicit Word(std::vector<int> l) : letters(std::move(l)) {}

    bool empty() const { return letters.empty(); }
    std::size_t length() const { return letters.size(); }

    bool freely_reduced() const {
        for (std::size_t i = 1; i < letters.size(); ++i)
            if (letters[i] == -letters[i - 1]) return false;
        return true;
    }

    Word inverse() const {
        Word w;
        w.letters.reserve(letters.size());
        for (auto it = letters.rbegin(); it != letters.rend(); ++it) w.letters.push_back(-*it);
        return w;
    }

    /// Concatenation with free reduction.
    Word operator*(const Word& o) const {
        Word w = *this;
        for (int l : o.letters) {
            if (!w.letters.empty() && w.letters.back() == -l) w.letters.pop_back();
            else w.letters.push_back(l);
        }
        return w;
    }

    bool operator==(const Word& o) const { return letters == o.letters; }
};

/// Word as a string of tokens a1 b1 A1 B1 ... (capital letter = inverse).
inline std::string to_string(const Word& w) {
    std::ostringstream os;
    for (std::size_t i = 0; i < w.letters.size(); ++i) {
        const int l = w.letters[i];
        const int idx = std::abs(l) - 1;     // 0-based generator index
        const int pair = idx / 2 + 1;        // handle number
        const bool is_b = idx % 2 != 0;
        char c = is_b ? 'b' : 'a';
        if (l < 0) c = static_cast<char>(std::toupper(c));
        if (i) os << ' ';
        os << c << pair;
    }
    return os.str();
}

inline Word parse_word(const std::string& s, int genus) {
    Word w;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
        if (tok.size() < 2) throw ParseError("word token too short: " + tok);
        const char c = tok[0];
        const char base = static_cast<char>(std::tolower(c));
        if (base != 'a' && base != 'b') throw ParseError("bad word token: " + tok);
        int pair = 0;
        try { pair = std::stoi(tok.substr(1)); }
        catch (...) { throw ParseError("bad word token: " + tok); }
        if (pair < 1 || pair > genus) throw ParseError("generator index out of range: " + tok);
        int idx = 2 * (pair - 1) + (base == 'b' ? 1 : 0) + 1;
        w.letters.push_back(std::isupper(static_cast<unsigned char>(c)) ? -idx : idx);
    }
    if (!w.freely_reduced()) throw ParseError("word is not freely reduced: " + s);
    return w;
}

struct SurfaceGroup {
    int genus = 2;

    explicit SurfaceGroup(int g = 2) : genus(g) {
        if (g < 2) throw Error("SurfaceGroup: genus must be at least 2");
    }

    int num_generators() const { return 2 * genus; }
    int euler_characteristic() const { return 2 - 2 * genus; }

    /// The standard relator [a1,b1][a2,b2]...[ag,bg].
    Word relator() const {
        Word w;
        for (int i = 0; i < genus; ++i) {
            const int a = 2 * i + 1, b = 2 * i + 2;
            w.letters.insert(w.letters.end(), {a, b, -a, -b});
        }
        return w;
    }
};

/// Visit all freely reduced nonempty words of length <= radius in
/// (length, lexicographic) order, where letters sort by signed index with
/// +1 < -1 < +2 < -2 < ... (generator before its inverse).
inline void visit_ball(const SurfaceGroup& group, int radius,
                       const std::function<void(const Word&)>& visit) {
    if (radius < 1) throw Error("visit_ball: radius must be at least 1");
    const int n = group.num_generators();
    std::vector<int> alphabet;
    for (int k = 1; k <= n; ++k) { alphabet.push_back(k); alphabet.push_back(-k); }
    std::vector<int> stack;
    for (int len = 1; len <= radius; ++len) {
        // Depth-first in lexicographic order over words of exact length len.
        std::function<void()> rec = [&]() {
            if (static_cast<int>(stack.size()) == len) {
                visit(Word(stack));
                return;
            }
            for (int l : alphabet) {
                if (!stack.empty() && stack.back() == -l) continue;
                stack.push_back(l);
                rec();
                stack.pop_back();
            }
        };
        rec();
    }
}

inline std::size_t ball_count(const SurfaceGroup& group, int radius) {
    const std::size_t n = 2 * static_cast<std::size_t>(group.num_generators());
    std::size_t total = 0, level = n;
    for (int len = 1; len <= radius; ++len) {
        total += level;
        level *= n - 1;
    }
    return total;
}

inline std::vector<Word> enumerate_ball(const SurfaceGroup& group, int radius,
                                        std::size_t cap = 2'000'000) {
    if (ball_count(group, radius) > cap)
        throw BallTooLarge("enumerate_ball: word count exceeds the configured cap");
    std::vector<Word> out;
    out.reserve(ball_count(group, radius));
    visit_ball(group, radius, [&](const Word& w) { out.push_back(w); });
    return out;
}

} // namespace domlip
