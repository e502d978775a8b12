#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chebclt/common.hpp"
#include "chebclt/rational.hpp"

namespace chebclt {

// ---------------------------------------------------------------------------
// Annular partitions: set partitions of two labeled circles.
//
// A point is (circle, pos) with circle in {0,1} and pos in 1..k_circle.
// Positions are cyclic; ]a,b[ below always means the open cyclic interval.
// ---------------------------------------------------------------------------

struct Point {
    int circle = 0;
    int pos = 1;
    friend bool operator==(const Point&, const Point&) = default;
    friend auto operator<=>(const Point&, const Point&) = default;
};

// x in ]a,b[ on a circle of k points. Empty when b = a+1 cyclically;
// ]2,1[_k = {3,...,k}.
inline bool in_cyclic_open_interval(int x, int a, int b, int k) {
    if (x == a || x == b) return false;
    int dx = mod_pos(x - a - 1, k);
    int db = mod_pos(b - a - 1, k);
    return dx < db;
}

class AnnularPartition {
public:
    AnnularPartition(int k1, int k2, std::vector<std::vector<Point>> blocks)
        : sizes_{k1, k2}, blocks_(std::move(blocks)) {
        if (k1 < 1 || k2 < 1) throw std::invalid_argument("AnnularPartition: circle sizes must be >= 1");
        for (auto& b : blocks_) std::sort(b.begin(), b.end());
        std::sort(blocks_.begin(), blocks_.end());
        block_of_.assign(static_cast<std::size_t>(k1 + k2), -1);
        int covered = 0;
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
            if (blocks_[bi].empty()) throw std::invalid_argument("AnnularPartition: empty block");
            for (const Point& p : blocks_[bi]) {
                std::size_t idx = flat_index(p);
                if (block_of_[idx] != -1) throw std::invalid_argument("AnnularPartition: point covered twice");
                block_of_[idx] = static_cast<int>(bi);
                ++covered;
            }
        }
        if (covered != k1 + k2) throw std::invalid_argument("AnnularPartition: blocks do not cover all points");
    }

    int circle_size(int circle) const { return sizes_[static_cast<std::size_t>(circle)]; }
    const std::vector<std::vector<Point>>& blocks() const { return blocks_; }
    int block_index(Point p) const { return block_of_[flat_index(p)]; }
    bool same_block(Point a, Point b) const { return block_index(a) == block_index(b); }

    friend bool operator==(const AnnularPartition& a, const AnnularPartition& b) {
        return a.sizes_ == b.sizes_ && a.blocks_ == b.blocks_;
    }

private:
    std::size_t flat_index(Point p) const {
        if (p.circle < 0 || p.circle > 1 || p.pos < 1 || p.pos > sizes_[static_cast<std::size_t>(p.circle)])
            throw std::invalid_argument("AnnularPartition: point out of range");
        return static_cast<std::size_t>(p.circle == 0 ? p.pos - 1 : sizes_[0] + p.pos - 1);
    }

    std::array<int, 2> sizes_;
    std::vector<std::vector<Point>> blocks_;
    std::vector<int> block_of_;
};

// All set partitions of [k1] u [k2], via restricted growth strings.
inline std::vector<AnnularPartition> enumerate_partitions(int k1, int k2) {
    require_guard(k1 >= 1 && k2 >= 1 && k1 + k2 <= 10,
                  "enumerate_partitions: requires k1,k2 >= 1 and k1 + k2 <= 10");
    int npts = k1 + k2;
    auto point_at = [&](int flat) { return flat < k1 ? Point{0, flat + 1} : Point{1, flat - k1 + 1}; };
    std::vector<AnnularPartition> out;
    std::vector<int> rgs(static_cast<std::size_t>(npts), 0);
    while (true) {
        int nblocks = 1 + *std::max_element(rgs.begin(), rgs.end());
        std::vector<std::vector<Point>> blocks(static_cast<std::size_t>(nblocks));
        for (int i = 0; i < npts; ++i) blocks[static_cast<std::size_t>(rgs[static_cast<std::size_t>(i)])].push_back(point_at(i));
        out.emplace_back(k1, k2, std::move(blocks));
        // next restricted growth string
        int i = npts - 1;
        for (; i > 0; --i) {
            int cap = 0;
            for (int j = 0; j < i; ++j) cap = std::max(cap, rgs[static_cast<std::size_t>(j)]);
            if (rgs[static_cast<std::size_t>(i)] <= cap) break;
        }
        if (i == 0) break;
        ++rgs[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < npts; ++j) rgs[static_cast<std::size_t>(j)] = 0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classification predicates
// ---------------------------------------------------------------------------

struct Classification {
    bool has_singleton = false;
    bool is_pair_partition = false;
    bool connected = false;
    std::array<int, 2> connectors_per_circle{0, 0};
    bool all_connectors_simple = false;
    bool has_connector_four_block = false;
    bool crossing = false;
    bool dihedral = false;
};

namespace detail {

inline bool is_connector(const AnnularPartition& pi, Point p) {
    for (const Point& q : pi.blocks()[static_cast<std::size_t>(pi.block_index(p))])
        if (q.circle != p.circle) return true;
    return false;
}

// Crossing: some same-circle linked pair (i,l1) ~ (i,l2) has points m1, m2 in
// the two opposite open intervals that are either linked to each other or
// both connectors.
inline bool is_crossing(const AnnularPartition& pi) {
    for (int circle = 0; circle < 2; ++circle) {
        int k = pi.circle_size(circle);
        for (int l1 = 1; l1 <= k; ++l1) {
            for (int l2 = l1 + 1; l2 <= k; ++l2) {
                if (!pi.same_block({circle, l1}, {circle, l2})) continue;
                for (int m1 = 1; m1 <= k; ++m1) {
                    if (!in_cyclic_open_interval(m1, l1, l2, k)) continue;
                    for (int m2 = 1; m2 <= k; ++m2) {
                        if (!in_cyclic_open_interval(m2, l2, l1, k)) continue;
                        if (pi.same_block({circle, m1}, {circle, m2})) return true;
                        if (is_connector(pi, {circle, m1}) && is_connector(pi, {circle, m2})) return true;
                    }
                }
            }
        }
    }
    return false;
}

struct ConnectorShape {
    bool well_formed = false;       // blocks are same-circle pairs, cross 2-blocks, or the single 2+2 block
    bool four_block = false;        // the connectors form one 2+2 block
    std::array<std::vector<int>, 2> connectors;  // sorted positions per circle
    // for cross-pair linking: sigma[j] = index (0-based, in sorted order) of the
    // circle-1 connector linked to the j-th circle-0 connector
    std::vector<int> sigma;
};

inline ConnectorShape connector_shape(const AnnularPartition& pi) {
    ConnectorShape shape;
    int cross_pair_blocks = 0, four_blocks = 0;
    for (const auto& b : pi.blocks()) {
        int on0 = 0, on1 = 0;
        for (const Point& p : b) (p.circle == 0 ? on0 : on1)++;
        if (on0 > 0 && on1 > 0) {
            if (on0 == 1 && on1 == 1)
                ++cross_pair_blocks;
            else if (on0 == 2 && on1 == 2)
                ++four_blocks;
            else
                return shape;  // connector block of a non-admissible shape
            for (const Point& p : b) shape.connectors[static_cast<std::size_t>(p.circle)].push_back(p.pos);
        } else {
            if (b.size() != 2) return shape;  // same-circle blocks must be pairs
        }
    }
    if (four_blocks > 1 || (four_blocks == 1 && cross_pair_blocks > 0)) return shape;
    shape.four_block = four_blocks == 1;
    for (auto& c : shape.connectors) std::sort(c.begin(), c.end());
    if (shape.connectors[0].size() != shape.connectors[1].size()) return shape;
    if (!shape.four_block) {
        std::size_t m = shape.connectors[0].size();
        shape.sigma.assign(m, -1);
        for (std::size_t j = 0; j < m; ++j) {
            Point a{0, shape.connectors[0][j]};
            const auto& blk = pi.blocks()[static_cast<std::size_t>(pi.block_index(a))];
            int partner_pos = blk[0].circle == 1 ? blk[0].pos : blk[1].pos;
            auto it = std::lower_bound(shape.connectors[1].begin(), shape.connectors[1].end(), partner_pos);
            shape.sigma[j] = static_cast<int>(it - shape.connectors[1].begin());
        }
    }
    shape.well_formed = true;
    return shape;
}

// A bijection of Z_m maps neighbors to neighbors iff its cyclic differences
// are constant and equal to +1 or -1.
inline bool neighbor_preserving(const std::vector<int>& sigma) {
    int m = static_cast<int>(sigma.size());
    if (m <= 2) return true;
    int d = mod_pos(sigma[1] - sigma[0], m);
    if (d != 1 && d != m - 1) return false;
    for (int j = 0; j < m; ++j)
        if (mod_pos(sigma[static_cast<std::size_t>((j + 1) % m)] - sigma[static_cast<std::size_t>(j)], m) != d)
            return false;
    return true;
}

}  // namespace detail

inline Classification classify(const AnnularPartition& pi) {
    Classification c;
    c.is_pair_partition = true;
    bool seen_cross_block = false;
    for (const auto& b : pi.blocks()) {
        if (b.size() == 1) c.has_singleton = true;
        if (b.size() != 2) c.is_pair_partition = false;
        int on0 = 0, on1 = 0;
        for (const Point& p : b) (p.circle == 0 ? on0 : on1)++;
        if (on0 > 0 && on1 > 0) {
            seen_cross_block = true;
            c.connectors_per_circle[0] += on0;
            c.connectors_per_circle[1] += on1;
            if (b.size() == 4 && on0 == 2 && on1 == 2) c.has_connector_four_block = true;
        }
    }
    c.connected = seen_cross_block;
    c.all_connectors_simple = true;
    for (const auto& b : pi.blocks()) {
        int on0 = 0, on1 = 0;
        for (const Point& p : b) (p.circle == 0 ? on0 : on1)++;
        if (on0 > 0 && on1 > 0 && (on0 > 1 || on1 > 1)) c.all_connectors_simple = false;
    }
    c.crossing = detail::is_crossing(pi);

    // Dihedral: connected, non-crossing, equal connector counts m >= 1 per
    // circle, every block a same-circle pair or a cross link, and the links
    // realize a rotation/reflection. For m = 2 the only admissible linking is
    // the single 4-block; two separate cross pairs admit no compatible
    // off-diagonal multi-index and are excluded.
    c.dihedral = false;
    if (c.connected && !c.crossing && c.connectors_per_circle[0] == c.connectors_per_circle[1] &&
        c.connectors_per_circle[0] >= 1) {
        auto shape = detail::connector_shape(pi);
        if (shape.well_formed) {
            int m = static_cast<int>(shape.connectors[0].size());
            if (m == 2)
                c.dihedral = shape.four_block;
            else if (!shape.four_block)
                c.dihedral = detail::neighbor_preserving(shape.sigma);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Dihedral elements: rotation/reflection symmetries of m cyclic labels.
// For m in {1,2} the group is collapsed to the identity element.
// ---------------------------------------------------------------------------

struct DihedralElement {
    int m = 1;
    bool reflection = false;
    int offset = 0;

    // action on 0-based labels
    int apply0(int j) const { return reflection ? mod_pos(offset - j, m) : mod_pos(j + offset, m); }
    // action on 1-based positions
    int apply(int l) const { return apply0(l - 1) + 1; }

    DihedralElement inverse() const {
        if (reflection) return *this;
        return {m, false, mod_pos(-offset, m)};
    }

    // (*this) after `other`: composition as maps, this(other(j)).
    DihedralElement compose(const DihedralElement& other) const {
        if (m != other.m) throw std::invalid_argument("DihedralElement: mixed m");
        if (!reflection && !other.reflection) return {m, false, mod_pos(offset + other.offset, m)};
        if (!reflection && other.reflection) return {m, true, mod_pos(offset + other.offset, m)};
        if (reflection && !other.reflection) return {m, true, mod_pos(offset - other.offset, m)};
        return {m, false, mod_pos(offset - other.offset, m)};
    }

    bool identity() const { return !reflection && offset == 0; }

    static std::vector<DihedralElement> group(int m) {
        if (m < 1) throw std::invalid_argument("DihedralElement: m must be >= 1");
        if (m <= 2) return {DihedralElement{m, false, 0}};
        std::vector<DihedralElement> g;
        for (int c = 0; c < m; ++c) g.push_back({m, false, c});
        for (int c = 0; c < m; ++c) g.push_back({m, true, c});
        return g;
    }

    friend bool operator==(const DihedralElement&, const DihedralElement&) = default;
};

// The reduced partition on [m] u [m] realized by g: cross pairs
// {(0,j),(1,g(j))} for m != 2; the single block for m = 1; the 4-block for
// m = 2.
inline AnnularPartition canonical_reduced(const DihedralElement& g) {
    int m = g.m;
    if (m == 1) return AnnularPartition(1, 1, {{Point{0, 1}, Point{1, 1}}});
    if (m == 2)
        return AnnularPartition(2, 2, {{Point{0, 1}, Point{0, 2}, Point{1, 1}, Point{1, 2}}});
    std::vector<std::vector<Point>> blocks;
    for (int j = 0; j < m; ++j) blocks.push_back({Point{0, j + 1}, Point{1, g.apply0(j) + 1}});
    return AnnularPartition(m, m, std::move(blocks));
}

// Alternative dihedral test: reduce the connector links and compare against
// the canonical partitions realized by the group elements.
inline bool dihedral_matches_canonical(const AnnularPartition& pi) {
    Classification c;
    c = classify(pi);  // reuse the cheap predicates
    if (!c.connected || c.crossing || c.connectors_per_circle[0] != c.connectors_per_circle[1] ||
        c.connectors_per_circle[0] < 1)
        return false;
    auto shape = detail::connector_shape(pi);
    if (!shape.well_formed) return false;
    int m = static_cast<int>(shape.connectors[0].size());
    std::vector<std::vector<Point>> reduced_blocks;
    if (shape.four_block) {
        if (m != 2) return false;
        reduced_blocks.push_back({Point{0, 1}, Point{0, 2}, Point{1, 1}, Point{1, 2}});
    } else {
        if (m == 2) return false;
        for (int j = 0; j < m; ++j)
            reduced_blocks.push_back({Point{0, j + 1}, Point{1, shape.sigma[static_cast<std::size_t>(j)] + 1}});
    }
    AnnularPartition reduced(m, m, std::move(reduced_blocks));
    for (const auto& g : DihedralElement::group(m))
        if (reduced == canonical_reduced(g)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Half pair partitions of one circle: pairs plus open connectors, with a
// marked point replacing the connectors in the m = 0 case.
// ---------------------------------------------------------------------------

struct HalfPairPartition {
    int size = 0;
    std::vector<std::pair<int, int>> pairs;  // (lo, hi), sorted
    std::vector<int> open_connectors;        // sorted
    std::optional<int> mark;                 // present exactly when open_connectors is empty

    int open_count() const { return static_cast<int>(open_connectors.size()); }

    bool is_open(int x) const {
        return std::binary_search(open_connectors.begin(), open_connectors.end(), x);
    }

    std::optional<int> partner(int x) const {
        for (const auto& [a, b] : pairs) {
            if (a == x) return b;
            if (b == x) return a;
        }
        return std::nullopt;
    }

    void canonicalize() {
        for (auto& [a, b] : pairs)
            if (a > b) std::swap(a, b);
        std::sort(pairs.begin(), pairs.end());
        std::sort(open_connectors.begin(), open_connectors.end());
    }

    // Mark rule: mark u is valid iff u = size or u+1 is paired with some l <= u.
    void validate() const {
        std::vector<bool> seen(static_cast<std::size_t>(size) + 1, false);
        auto touch = [&](int x) {
            if (x < 1 || x > size || seen[static_cast<std::size_t>(x)])
                throw std::invalid_argument("HalfPairPartition: bad cover");
            seen[static_cast<std::size_t>(x)] = true;
        };
        for (const auto& [a, b] : pairs) {
            touch(a);
            touch(b);
        }
        for (int oc : open_connectors) touch(oc);
        for (int x = 1; x <= size; ++x)
            if (!seen[static_cast<std::size_t>(x)]) throw std::invalid_argument("HalfPairPartition: bad cover");
        if (mark.has_value() != open_connectors.empty())
            throw std::invalid_argument("HalfPairPartition: mark present iff no open connectors");
        if (mark) {
            int u = *mark;
            if (u < 1 || u > size) throw std::invalid_argument("HalfPairPartition: mark out of range");
            if (u != size) {
                auto p = partner(u + 1);
                if (!p || *p > u) throw std::invalid_argument("HalfPairPartition: invalid mark");
            }
        }
    }

    friend bool operator==(const HalfPairPartition&, const HalfPairPartition&) = default;
    friend auto operator<=>(const HalfPairPartition&, const HalfPairPartition&) = default;
};

namespace detail {

// Non-crossing on the circle: no pair may separate another pair, and no pair
// may separate two open connectors. When one side interval is empty the
// condition is vacuous.
inline bool half_pair_non_crossing(const HalfPairPartition& h) {
    int k = h.size;
    for (const auto& [l1, l2] : h.pairs) {
        bool open_in = false, open_out = false;
        for (int oc : h.open_connectors) {
            if (in_cyclic_open_interval(oc, l1, l2, k)) open_in = true;
            if (in_cyclic_open_interval(oc, l2, l1, k)) open_out = true;
        }
        if (open_in && open_out) return false;
        for (const auto& [a, b] : h.pairs) {
            if (a == l1 && b == l2) continue;
            bool a_in = in_cyclic_open_interval(a, l1, l2, k);
            bool b_in = in_cyclic_open_interval(b, l1, l2, k);
            bool a_out = in_cyclic_open_interval(a, l2, l1, k);
            bool b_out = in_cyclic_open_interval(b, l2, l1, k);
            if ((a_in && b_out) || (a_out && b_in)) return false;
        }
    }
    return true;
}

inline void enumerate_half_pairs_rec(int k, std::vector<int>& unused, HalfPairPartition& cur,
                                     std::vector<HalfPairPartition>& out) {
    if (unused.empty()) {
        HalfPairPartition h = cur;
        h.canonicalize();
        out.push_back(std::move(h));
        return;
    }
    int x = unused.front();
    std::vector<int> rest(unused.begin() + 1, unused.end());
    // x as an open connector
    cur.open_connectors.push_back(x);
    enumerate_half_pairs_rec(k, rest, cur, out);
    cur.open_connectors.pop_back();
    // x paired with each later point
    for (std::size_t i = 0; i < rest.size(); ++i) {
        int y = rest[i];
        std::vector<int> rest2 = rest;
        rest2.erase(rest2.begin() + static_cast<std::ptrdiff_t>(i));
        cur.pairs.emplace_back(x, y);
        enumerate_half_pairs_rec(k, rest2, cur, out);
        cur.pairs.pop_back();
    }
}

}  // namespace detail

// All non-crossing half pair partitions of [k], keyed by the number m of open
// connectors. The m = 0 entry holds the marked non-crossing pair partitions.
inline std::map<int, std::vector<HalfPairPartition>> enumerate_nchpp(int k) {
    require_guard(k >= 1 && k <= 12, "enumerate_nchpp: requires 1 <= k <= 12");
    std::vector<HalfPairPartition> all;
    {
        std::vector<int> pts(static_cast<std::size_t>(k));
        std::iota(pts.begin(), pts.end(), 1);
        HalfPairPartition cur;
        cur.size = k;
        detail::enumerate_half_pairs_rec(k, pts, cur, all);
    }
    std::map<int, std::vector<HalfPairPartition>> by_m;
    for (auto& h : all) {
        if (!detail::half_pair_non_crossing(h)) continue;
        int m = h.open_count();
        if (m >= 1) {
            by_m[m].push_back(std::move(h));
        } else {
            for (int u = 1; u <= k; ++u) {
                if (u != k) {
                    auto p = h.partner(u + 1);
                    if (!p || *p > u) continue;
                }
                HalfPairPartition marked = h;
                marked.mark = u;
                by_m[0].push_back(std::move(marked));
            }
        }
    }
    for (auto& [m, v] : by_m) std::sort(v.begin(), v.end());
    return by_m;
}

// ---------------------------------------------------------------------------
// The removal map Z on non-crossing half pair partitions and its inverses.
// ---------------------------------------------------------------------------

namespace detail {

// Largest l >= l_max such that (l_max, l] is a union of pairs of h.
inline int removable_point(const HalfPairPartition& h) {
    if (h.mark) return *h.mark;
    int lmax = h.open_connectors.back();
    int best = lmax;
    for (int l = lmax + 1; l <= h.size; ++l) {
        bool closed = true;
        for (int x = lmax + 1; x <= l && closed; ++x) {
            auto p = h.partner(x);
            closed = p.has_value() && *p > lmax && *p <= l;
        }
        if (closed) best = l;
    }
    return best;
}

inline HalfPairPartition relabel_after_removal(const HalfPairPartition& h, int removed) {
    HalfPairPartition out;
    out.size = h.size - 1;
    auto shift = [&](int x) { return x > removed ? x - 1 : x; };
    for (const auto& [a, b] : h.pairs) {
        if (a == removed) {
            out.open_connectors.push_back(shift(b));
        } else if (b == removed) {
            out.open_connectors.push_back(shift(a));
        } else {
            out.pairs.emplace_back(shift(a), shift(b));
        }
    }
    for (int oc : h.open_connectors)
        if (oc != removed) out.open_connectors.push_back(shift(oc));
    out.canonicalize();
    return out;
}

}  // namespace detail

// Removes the point mu(h) (the mark, when present). An open connector removal
// lowers the connector count; a paired-point removal frees the partner and
// raises it. When the result has no connectors the point mu-1 is marked.
inline HalfPairPartition z_map(const HalfPairPartition& h) {
    h.validate();
    if (h.size < 2) throw std::invalid_argument("z_map: needs at least 2 points");
    int mu = detail::removable_point(h);
    HalfPairPartition out = detail::relabel_after_removal(h, mu);
    if (!h.mark && h.is_open(mu) && out.open_connectors.empty()) out.mark = mu - 1;
    out.validate();
    return out;
}

// Branch taken by z_map: -1 when it removed an open connector (count m -> m-1),
// +1 when it removed a paired point (m -> m+1). For marked inputs the branch
// is +1 by construction (the mark is always paired).
inline int z_map_branch(const HalfPairPartition& h) {
    int mu = detail::removable_point(h);
    return (!h.mark && h.is_open(mu)) ? -1 : +1;
}

// Orientation bit of the double cover on marked partitions: +1 when the mark
// is paired to its left, -1 when paired to its right neighbor.
inline int z_cover_sign(const HalfPairPartition& h) {
    if (!h.mark) throw std::invalid_argument("z_cover_sign: input must be marked");
    auto p = h.partner(*h.mark);
    return (p && *p < *h.mark) ? +1 : -1;
}

namespace detail {

inline HalfPairPartition insert_point(const HalfPairPartition& h, int where) {
    // New point occupies position `where`; old positions >= where shift up.
    HalfPairPartition out;
    out.size = h.size + 1;
    auto shift = [&](int x) { return x >= where ? x + 1 : x; };
    for (const auto& [a, b] : h.pairs) out.pairs.emplace_back(shift(a), shift(b));
    for (int oc : h.open_connectors) out.open_connectors.push_back(shift(oc));
    return out;
}

}  // namespace detail

// Inserts a new open connector to the right of mu(h): m -> m+1 on one more
// point. Marked inputs lose their mark.
inline HalfPairPartition z_inverse_open(const HalfPairPartition& h) {
    h.validate();
    int mu = detail::removable_point(h);
    HalfPairPartition out = detail::insert_point(h, mu + 1);
    out.open_connectors.push_back(mu + 1);
    out.mark.reset();
    out.canonicalize();
    out.validate();
    return out;
}

// Inserts a new point to the right of mu(h), paired with the largest open
// connector: m -> m-1 on one more point. Requires m >= 2.
inline HalfPairPartition z_inverse_close(const HalfPairPartition& h) {
    h.validate();
    if (h.open_count() < 2) throw std::invalid_argument("z_inverse_close: needs >= 2 open connectors");
    int lmax = h.open_connectors.back();
    int mu = detail::removable_point(h);
    HalfPairPartition out = detail::insert_point(h, mu + 1);
    out.open_connectors.erase(std::find(out.open_connectors.begin(), out.open_connectors.end(), lmax));
    out.pairs.emplace_back(lmax, mu + 1);
    out.canonicalize();
    out.validate();
    return out;
}

// Inverse of the double cover: from a single-connector partition and a sign,
// rebuild the marked partition. sign=+1 pairs a new marked point to the right
// of mu with the connector; sign=-1 pairs a new marked point immediately to
// the left of the connector.
inline HalfPairPartition z_inverse_marked(const HalfPairPartition& h, int sign) {
    h.validate();
    if (h.open_count() != 1) throw std::invalid_argument("z_inverse_marked: needs exactly 1 open connector");
    int c = h.open_connectors.front();
    HalfPairPartition out;
    if (sign > 0) {
        int mu = detail::removable_point(h);
        out = detail::insert_point(h, mu + 1);
        out.open_connectors.clear();
        out.pairs.emplace_back(c, mu + 1);  // c <= mu, unshifted
        out.mark = mu + 1;
    } else {
        out = detail::insert_point(h, c);
        out.open_connectors.clear();
        out.pairs.emplace_back(c, c + 1);
        out.mark = c;
    }
    out.canonicalize();
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Decomposition of a dihedral annular partition into a group element plus a
// half pair partition on each circle, and the inverse gluing.
// ---------------------------------------------------------------------------

struct DihedralDecomposition {
    DihedralElement g;
    HalfPairPartition circle1, circle2;
};

inline DihedralDecomposition decompose(const AnnularPartition& pi) {
    Classification c = classify(pi);
    if (!c.dihedral) throw std::domain_error("decompose: partition is not dihedral");
    auto shape = detail::connector_shape(pi);
    int m = static_cast<int>(shape.connectors[0].size());

    DihedralDecomposition d;
    for (int circle = 0; circle < 2; ++circle) {
        HalfPairPartition& h = circle == 0 ? d.circle1 : d.circle2;
        h.size = pi.circle_size(circle);
        h.open_connectors = shape.connectors[static_cast<std::size_t>(circle)];
        for (const auto& b : pi.blocks()) {
            if (b.size() == 2 && b[0].circle == circle && b[1].circle == circle)
                h.pairs.emplace_back(b[0].pos, b[1].pos);
        }
        h.canonicalize();
        h.validate();
    }
    if (m <= 2) {
        d.g = DihedralElement{m, false, 0};
        return d;
    }
    const auto& sigma = shape.sigma;
    int d1 = mod_pos(sigma[1] - sigma[0], m);
    if (d1 == 1)
        d.g = DihedralElement{m, false, sigma[0]};  // sigma0(j) = j + offset
    else
        d.g = DihedralElement{m, true, sigma[0]};  // sigma0(j) = offset - j
    return d;
}

inline AnnularPartition recombine(const DihedralElement& g, const HalfPairPartition& h1,
                                  const HalfPairPartition& h2) {
    h1.validate();
    h2.validate();
    if (h1.mark || h2.mark) throw std::invalid_argument("recombine: marked partitions cannot be glued");
    int m = g.m;
    if (h1.open_count() != m || h2.open_count() != m)
        throw std::invalid_argument("recombine: open connector counts must equal g.m");
    std::vector<std::vector<Point>> blocks;
    for (const auto& [a, b] : h1.pairs) blocks.push_back({Point{0, a}, Point{0, b}});
    for (const auto& [a, b] : h2.pairs) blocks.push_back({Point{1, a}, Point{1, b}});
    if (m == 2) {
        blocks.push_back({Point{0, h1.open_connectors[0]}, Point{0, h1.open_connectors[1]},
                          Point{1, h2.open_connectors[0]}, Point{1, h2.open_connectors[1]}});
    } else {
        for (int j = 0; j < m; ++j)
            blocks.push_back({Point{0, h1.open_connectors[static_cast<std::size_t>(j)]},
                              Point{1, h2.open_connectors[static_cast<std::size_t>(g.apply0(j))]}});
    }
    return AnnularPartition(h1.size, h2.size, std::move(blocks));
}

// ---------------------------------------------------------------------------
// Consistent multi-indices and the dihedral group action on them.
// ---------------------------------------------------------------------------

// Index pairs (p,q), 0-based values in [0,n), one ring of pairs per circle.
// Consistency: the second index of each pair equals the first index of its
// cyclic successor.
struct MultiIndex {
    int n = 0;
    std::array<std::vector<std::pair<int, int>>, 2> entries;

    bool consistent() const {
        for (const auto& circle : entries) {
            std::size_t k = circle.size();
            if (k == 0) return false;
            for (std::size_t l = 0; l < k; ++l) {
                if (circle[l].second != circle[(l + 1) % k].first) return false;
                if (circle[l].first < 0 || circle[l].first >= n || circle[l].second < 0 ||
                    circle[l].second >= n)
                    return false;
            }
        }
        return true;
    }
};

// First circle unchanged; position l on the second circle receives the entry
// from g^{-1}(l), transposed when g is a reflection.
inline MultiIndex group_action(const DihedralElement& g, const MultiIndex& P) {
    if (!P.consistent()) throw std::domain_error("group_action: inconsistent multi-index");
    int m = g.m;
    if (static_cast<int>(P.entries[0].size()) != m || static_cast<int>(P.entries[1].size()) != m)
        throw std::domain_error("group_action: circle sizes must equal g.m");
    MultiIndex out;
    out.n = P.n;
    out.entries[0] = P.entries[0];
    out.entries[1].resize(static_cast<std::size_t>(m));
    DihedralElement ginv = g.inverse();
    for (int l = 0; l < m; ++l) {
        auto src = P.entries[1][static_cast<std::size_t>(ginv.apply0(l))];
        out.entries[1][static_cast<std::size_t>(l)] = g.reflection ? std::pair{src.second, src.first} : src;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Eulerian numbers and cyclic-rise probabilities.
// ---------------------------------------------------------------------------

// A(m,k) = sum_j (-1)^j C(m+1,j) (k-j)^m, exact. 0^0 = 1.
inline std::int64_t eulerian(int m, int k) {
    if (m < 0 || k < 0) throw std::invalid_argument("eulerian: negative arguments");
    require_guard(m <= 18, "eulerian: requires m <= 18");
    if (k == 0) return m == 0 ? 1 : 0;
    __int128 acc = 0;
    __int128 binom = 1;  // C(m+1, j)
    for (int j = 0; j <= k && j <= m + 1; ++j) {
        __int128 power = 1;
        for (int i = 0; i < m; ++i) power *= (k - j);
        acc += (j % 2 == 0 ? power : -power) * binom;
        binom = binom * (m + 1 - j) / (j + 1);
    }
    if (acc > INT64_MAX || acc < INT64_MIN) throw std::overflow_error("eulerian: result overflow");
    return static_cast<std::int64_t>(acc);
}

inline std::int64_t factorial64(int n) {
    std::int64_t f = 1;
    for (int i = 2; i <= n; ++i) f = checked_mul(f, i);
    return f;
}

// Probability that a uniformly random cyclic sequence of m distinct values has
// exactly k rises: rho_m(k) = m A(m-1,k) / m!.
inline Rational rho(int m, int k) {
    if (m < 1) throw std::invalid_argument("rho: m must be >= 1");
    if (k < 0 || k > m) return Rational(0);
    return Rational(eulerian(m - 1, k), factorial64(m - 1));
}

// Rises in the cyclic sequence x_1,...,x_m,x_1.
inline int cyclic_rise_count(const std::vector<int>& x) {
    int m = static_cast<int>(x.size());
    int rises = 0;
    for (int l = 0; l < m; ++l)
        if (x[static_cast<std::size_t>((l + 1) % m)] > x[static_cast<std::size_t>(l)]) ++rises;
    return rises;
}

// Exhaustive oracle over all m! permutations.
inline Rational rho_by_exhaustion(int m, int k) {
    require_guard(m >= 1 && m <= 8, "rho_by_exhaustion: requires 1 <= m <= 8");
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 1);
    std::int64_t hits = 0;
    do {
        if (cyclic_rise_count(perm) == k) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return Rational(hits, factorial64(m));
}

// ---------------------------------------------------------------------------
// Count recurrences for the non-crossing half pair partitions, checked both
// by direct enumeration and through the removal bijection.
// ---------------------------------------------------------------------------

struct RecurrenceCheck {
    int k = 0;  // identity relates sizes k+1 and k
    int m = 0;
    std::int64_t lhs = 0;
    std::int64_t rhs = 0;
    bool ok = false;
};

struct RecurrenceReport {
    std::vector<RecurrenceCheck> checks;
    bool bijection_ok = true;  // z images cover the expected sets with the right multiplicity
    bool all_ok() const {
        if (!bijection_ok) return false;
        for (const auto& c : checks)
            if (!c.ok) return false;
        return true;
    }
};

inline RecurrenceReport verify_recurrences(int k_max) {
    require_guard(k_max >= 2 && k_max <= 11, "verify_recurrences: requires 2 <= k_max <= 11");
    RecurrenceReport report;
    std::vector<std::map<int, std::vector<HalfPairPartition>>> nchpp(static_cast<std::size_t>(k_max) + 1);
    for (int k = 1; k <= k_max; ++k) nchpp[static_cast<std::size_t>(k)] = enumerate_nchpp(k);
    auto count = [&](int k, int m) -> std::int64_t {
        auto it = nchpp[static_cast<std::size_t>(k)].find(m);
        return it == nchpp[static_cast<std::size_t>(k)].end() ? 0
                                                              : static_cast<std::int64_t>(it->second.size());
    };
    for (int k = 1; k + 1 <= k_max; ++k) {
        report.checks.push_back({k, 0, count(k + 1, 0), 2 * count(k, 1), false});
        report.checks.back().ok = report.checks.back().lhs == report.checks.back().rhs;
        for (int m = 1; m <= k + 1; ++m) {
            std::int64_t lhs = count(k + 1, m);
            std::int64_t rhs = count(k, m + 1) + count(k, m - 1);
            report.checks.push_back({k, m, lhs, rhs, lhs == rhs});
        }
        // bijection route: each target with m >= 2 connectors has one preimage
        // in each adjacent source level; level 1 gains the double cover from
        // the marked partitions; marked targets have a single preimage.
        std::map<HalfPairPartition, int> hits;
        for (const auto& [m, list] : nchpp[static_cast<std::size_t>(k + 1)])
            for (const auto& h : list) hits[z_map(h)] += 1;
        for (const auto& [m, list] : nchpp[static_cast<std::size_t>(k)]) {
            for (const auto& h : list) {
                auto it = hits.find(h);
                int expected = (m == 0) ? 1 : (m == 1 ? 3 : 2);
                if ((it == hits.end() ? 0 : it->second) != expected) report.bijection_ok = false;
                if (it != hits.end()) hits.erase(it);
            }
        }
        if (!hits.empty()) report.bijection_ok = false;
    }
    return report;
}

}  // namespace chebclt
