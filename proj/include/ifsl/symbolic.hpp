#pragma once

#include "ifsl/core.hpp"

#include <string>
#include <vector>

namespace ifsl {

// Finite word over {1..m}; empty word is the identity composition.
using Word = std::vector<int>;

inline void check_word(const Word& w, int m) {
    for (int s : w)
        if (s < 1 || s > m) throw InputError("symbol " + std::to_string(s) + " outside 1.." + std::to_string(m));
}

inline Word drop_last(const Word& w) {
    if (w.empty()) throw PreconditionError("drop_last of empty word");
    return Word(w.begin(), w.end() - 1);
}

inline Word drop_last(const Word& w, std::size_t n) {
    if (n > w.size()) throw PreconditionError("drop_last beyond word length");
    return Word(w.begin(), w.end() - static_cast<long>(n));
}

inline Word concat(const Word& a, const Word& b) {
    Word out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline Word repeat(const Word& w, std::size_t k) {
    Word out;
    out.reserve(w.size() * k);
    for (std::size_t i = 0; i < k; ++i) out.insert(out.end(), w.begin(), w.end());
    return out;
}

inline std::string word_str(const Word& w) {
    if (w.empty()) return "()";
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(w[i]);
    }
    return s;
}

// preperiod . period . period . ...
struct InfiniteWordSpec {
    Word preperiod;
    Word period;

    InfiniteWordSpec() = default;
    InfiniteWordSpec(Word pre, Word per) : preperiod(std::move(pre)), period(std::move(per)) {
        if (period.empty()) throw InputError("infinite word needs a non-empty period");
    }

    static InfiniteWordSpec periodic(Word per) { return {{}, std::move(per)}; }

    int at(std::size_t k) const {  // 0-based
        if (k < preperiod.size()) return preperiod[k];
        return period[(k - preperiod.size()) % period.size()];
    }
    int first() const { return at(0); }

    Word prefix(std::size_t n) const {
        Word out(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = at(k);
        return out;
    }

    bool operator==(const InfiniteWordSpec& o) const {
        std::size_t n = std::max(preperiod.size(), o.preperiod.size()) + period.size() * o.period.size();
        for (std::size_t k = 0; k < n; ++k)
            if (at(k) != o.at(k)) return false;
        return true;
    }
};

inline void check_word(const InfiniteWordSpec& w, int m) {
    check_word(w.preperiod, m);
    check_word(w.period, m);
}

// sigma^k
inline InfiniteWordSpec shift(const InfiniteWordSpec& w, std::size_t k) {
    if (k <= w.preperiod.size())
        return {Word(w.preperiod.begin() + static_cast<long>(k), w.preperiod.end()), w.period};
    std::size_t p = w.period.size();
    std::size_t rot = (k - w.preperiod.size()) % p;
    Word per(p);
    for (std::size_t i = 0; i < p; ++i) per[i] = w.period[(i + rot) % p];
    return {{}, per};
}

// Moran cut M_k = { w : |r_w| <= rho^k < |r_{w-}| } with |r_w| the product of
// the per-symbol bounds. Output in lexicographic order.
inline std::vector<Word> moran_class(const std::vector<Q>& ratio_mags, const Q& rho, int k,
                                     std::size_t budget = kDefaultWordBudget) {
    if (k < 1) throw PreconditionError("moran_class needs k >= 1");
    for (const auto& r : ratio_mags)
        if (r <= 0 || r >= 1) throw PreconditionError("moran_class needs ratios in (0,1)");
    const int m = static_cast<int>(ratio_mags.size());
    const Q cut = qpow(rho, k);
    std::vector<Word> out;
    std::size_t nodes = 0;
    Word w;
    std::vector<Q> prod{Q(1)};
    // DFS; prod[i] is the product over w[0..i)
    auto rec = [&](auto&& self) -> void {
        if (++nodes > budget) throw ResourceLimit("moran_class exceeded word budget");
        if (prod.back() <= cut) {
            out.push_back(w);
            return;
        }
        for (int s = 1; s <= m; ++s) {
            w.push_back(s);
            prod.push_back(prod.back() * ratio_mags[s - 1]);
            self(self);
            w.pop_back();
            prod.pop_back();
        }
    };
    rec(rec);
    return out;
}

}  // namespace ifsl
