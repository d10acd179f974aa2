#include "pluforge/masks.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace pluforge {

InstanceMask InstanceMask::from_bitmap(int width, int height,
                                       const std::vector<uint8_t>& bitmap,
                                       int64_t instance_id) {
    if (bitmap.size() != static_cast<size_t>(width) * height)
        throw std::invalid_argument("bitmap size mismatch");
    InstanceMask m;
    m.width = width;
    m.height = height;
    m.instance_id = instance_id;
    bool cur_fg = false;  // runs start with background
    uint32_t len = 0;
    for (uint8_t v : bitmap) {
        bool fg = v != 0;
        if (fg == cur_fg) {
            ++len;
        } else {
            m.runs.push_back(len);
            cur_fg = fg;
            len = 1;
        }
    }
    m.runs.push_back(len);
    return m;
}

std::vector<uint8_t> InstanceMask::to_bitmap() const {
    std::vector<uint8_t> bm(static_cast<size_t>(width) * height, 0);
    size_t pos = 0;
    bool fg = false;
    for (uint32_t r : runs) {
        if (fg) std::fill(bm.begin() + pos, bm.begin() + pos + r, uint8_t{1});
        pos += r;
        fg = !fg;
    }
    return bm;
}

uint64_t InstanceMask::area() const {
    uint64_t n = 0;
    for (size_t i = 1; i < runs.size(); i += 2) n += runs[i];
    return n;
}

void InstanceMask::validate() const {
    uint64_t total = std::accumulate(runs.begin(), runs.end(), uint64_t{0});
    if (total != static_cast<uint64_t>(width) * height)
        throw std::invalid_argument("RLE runs do not sum to width*height");
    for (size_t i = 1; i < runs.size(); ++i)
        if (runs[i] == 0 && runs[i - 1] == 0)
            throw std::invalid_argument("consecutive zero runs");
    if (!runs.empty() && runs.back() == 0 && runs.size() > 1)
        throw std::invalid_argument("trailing zero run");
}

void Scene::validate() const {
    std::unordered_set<int64_t> ids;
    for (const auto& m : instances) {
        if (m.width != width || m.height != height)
            throw std::invalid_argument("instance dims differ from scene");
        m.validate();
        if (m.area() == 0) throw std::invalid_argument("empty mask in scene");
        if (!ids.insert(m.instance_id).second)
            throw std::invalid_argument("duplicate instance_id in scene");
    }
    if (severe_overlap_flags && severe_overlap_flags->size() != instances.size())
        throw std::invalid_argument("severe_overlap_flags size mismatch");
}

double mask_iou(const InstanceMask& a, const InstanceMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("mask_iou: dimension mismatch");
    uint64_t inter = mask_intersection(a, b);
    uint64_t uni = a.area() + b.area() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

uint64_t mask_intersection(const InstanceMask& a, const InstanceMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("mask_intersection: dimension mismatch");
    // Walk the two run lists in lockstep over the flat pixel index.
    uint64_t inter = 0;
    size_t ia = 0, ib = 0;
    uint64_t ra = ia < a.runs.size() ? a.runs[ia] : 0;
    uint64_t rb = ib < b.runs.size() ? b.runs[ib] : 0;
    uint64_t total = static_cast<uint64_t>(a.width) * a.height;
    uint64_t pos = 0;
    while (pos < total) {
        while (ra == 0 && ia + 1 < a.runs.size()) ra = a.runs[++ia];
        while (rb == 0 && ib + 1 < b.runs.size()) rb = b.runs[++ib];
        uint64_t step = std::min(ra, rb);
        if (step == 0) break;
        bool fa = (ia % 2) == 1;
        bool fb = (ib % 2) == 1;
        if (fa && fb) inter += step;
        ra -= step;
        rb -= step;
        pos += step;
    }
    return inter;
}

InstanceMask merge_masks(const std::vector<InstanceMask>& masks, int64_t new_id) {
    if (masks.empty()) throw std::invalid_argument("merge_masks: empty input");
    int w = masks[0].width, h = masks[0].height;
    std::vector<uint8_t> bm(static_cast<size_t>(w) * h, 0);
    for (const auto& m : masks) {
        if (m.width != w || m.height != h)
            throw std::invalid_argument("merge_masks: dimension mismatch");
        size_t pos = 0;
        bool fg = false;
        for (uint32_t r : m.runs) {
            if (fg) std::fill(bm.begin() + pos, bm.begin() + pos + r, uint8_t{1});
            pos += r;
            fg = !fg;
        }
    }
    return InstanceMask::from_bitmap(w, h, bm, new_id);
}

std::vector<bool> severe_overlap_flags(const Scene& scene, double threshold) {
    size_t n = scene.instances.size();
    std::vector<bool> flags(n, false);
    if (n < 2) return flags;
    // Per-pixel cover count across all instances.
    std::vector<uint16_t> cover(static_cast<size_t>(scene.width) * scene.height, 0);
    for (const auto& m : scene.instances) {
        size_t pos = 0;
        bool fg = false;
        for (uint32_t r : m.runs) {
            if (fg)
                for (uint32_t k = 0; k < r; ++k) cover[pos + k]++;
            pos += r;
            fg = !fg;
        }
    }
    for (size_t i = 0; i < n; ++i) {
        uint64_t shared = 0, area = 0;
        size_t pos = 0;
        bool fg = false;
        for (uint32_t r : scene.instances[i].runs) {
            if (fg) {
                area += r;
                for (uint32_t k = 0; k < r; ++k)
                    if (cover[pos + k] >= 2) ++shared;
            }
            pos += r;
            fg = !fg;
        }
        if (area > 0)
            flags[i] = static_cast<double>(shared) > threshold * static_cast<double>(area);
    }
    return flags;
}

BoundingBox bbox_of(const InstanceMask& mask) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    const int w = mask.width;
    size_t pos = 0;
    bool fg = false;
    for (uint32_t r : mask.runs) {
        if (fg && r > 0) {
            int first = static_cast<int>(pos), last = static_cast<int>(pos + r - 1);
            int fy = first / w, ly = last / w;
            y0 = std::min(y0, fy);
            y1 = std::max(y1, ly);
            if (fy == ly) {
                x0 = std::min(x0, first % w);
                x1 = std::max(x1, last % w);
            } else {
                // a run wrapping past a row end covers a full row span
                x0 = 0;
                x1 = w - 1;
            }
        }
        pos += r;
        fg = !fg;
    }
    if (x1 < 0) throw std::invalid_argument("bbox_of: empty mask");
    return BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

namespace {

// Moore neighborhood, clockwise with y pointing down, starting at west.
constexpr int kDx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

// kDirLut[dy + 1][dx + 1] inverts (kDx, kDy); center is unused.
constexpr int kDirLut[3][3] = {{1, 2, 3}, {0, -1, 4}, {7, 6, 5}};

int dir_between(int cx, int cy, int nx, int ny) {
    return kDirLut[ny - cy + 1][nx - cx + 1];
}

// Moore trace over pixels satisfying `inside`, starting from a seed whose
// west neighbor is outside. Stops when the (position, backtrack) state
// repeats the initial state.
template <typename Inside>
std::vector<std::pair<int, int>> moore_trace(int sx, int sy, Inside inside, uint64_t max_steps) {
    std::vector<std::pair<int, int>> chain;
    chain.reserve(64);
    chain.emplace_back(sx, sy);
    int cx = sx, cy = sy;
    int bx = sx - 1, by = sy;  // backtrack (outside pixel)
    const int s_bx = bx, s_by = by;
    for (uint64_t step = 0; step < max_steps; ++step) {
        int d0 = dir_between(cx, cy, bx, by);
        int nx = -1, ny = -1, nbx = bx, nby = by;
        for (int j = 1; j <= 8; ++j) {
            int d = (d0 + j) & 7;
            int px = cx + kDx[d], py = cy + kDy[d];
            if (inside(px, py)) {
                nx = px;
                ny = py;
                break;
            }
            nbx = px;
            nby = py;
        }
        if (nx < 0) break;  // isolated pixel
        if (nx == sx && ny == sy && nbx == s_bx && nby == s_by) break;
        chain.emplace_back(nx, ny);
        cx = nx;
        cy = ny;
        bx = nbx;
        by = nby;
    }
    return chain;
}

}  // namespace

namespace {

// Horizontal pixel segment [x0, x1] on row y.
struct RowSeg {
    int y, x0, x1;
};

// Union-find keeping the smallest index as the representative.
struct SegDsu {
    std::vector<int> p;
    void reset(size_t n) {
        p.resize(n);
        std::iota(p.begin(), p.end(), 0);
    }
    int find(int a) {
        while (p[a] != a) a = p[a] = p[p[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) p[std::max(a, b)] = std::min(a, b);
    }
};

// Union segments on adjacent rows whose x-intervals come within `slack`
// (slack 1 = 8-connectivity, slack 0 = 4-connectivity). Segments must be in
// raster order.
void link_adjacent_rows(const std::vector<RowSeg>& ss, SegDsu& dsu, int slack) {
    size_t i = 0, pb = 0, pe = 0;
    int prev_y = std::numeric_limits<int>::min();
    while (i < ss.size()) {
        const int y = ss[i].y;
        const size_t rb = i;
        while (i < ss.size() && ss[i].y == y) ++i;
        const size_t re = i;
        if (y == prev_y + 1) {
            size_t j = pb;
            for (size_t k = rb; k < re; ++k) {
                while (j < pe && ss[j].x1 + slack < ss[k].x0) ++j;
                for (size_t j2 = j; j2 < pe && ss[j2].x0 <= ss[k].x1 + slack; ++j2)
                    dsu.unite(static_cast<int>(j2), static_cast<int>(k));
            }
        }
        pb = rb;
        pe = re;
        prev_y = y;
    }
}

// Same walk as moore_trace, specialized to a crop bitmap whose padding ring
// keeps every probe in bounds: neighbors are reached by index offsets and the
// output is shifted back to image coordinates by (ox, oy).
std::vector<std::pair<int, int>> moore_trace_bitmap(const uint8_t* bm, int w, int sx, int sy,
                                                    int ox, int oy, uint64_t max_steps) {
    std::vector<std::pair<int, int>> chain;
    chain.reserve(64);
    chain.emplace_back(sx + ox, sy + oy);
    ptrdiff_t noff[8];
    for (int d = 0; d < 8; ++d) noff[d] = static_cast<ptrdiff_t>(kDy[d]) * w + kDx[d];
    int cx = sx, cy = sy, bx = sx - 1, by = sy;
    ptrdiff_t p = static_cast<ptrdiff_t>(cy) * w + cx;
    const int s_bx = bx, s_by = by;
    for (uint64_t step = 0; step < max_steps; ++step) {
        int d0 = kDirLut[by - cy + 1][bx - cx + 1];
        int found = -1, nbx = bx, nby = by;
        for (int j = 1; j <= 8; ++j) {
            int d = (d0 + j) & 7;
            if (bm[p + noff[d]]) {
                found = d;
                break;
            }
            nbx = cx + kDx[d];
            nby = cy + kDy[d];
        }
        if (found < 0) break;  // isolated pixel
        const int nx = cx + kDx[found], ny = cy + kDy[found];
        if (nx == sx && ny == sy && nbx == s_bx && nby == s_by) break;
        chain.emplace_back(nx + ox, ny + oy);
        cx = nx;
        cy = ny;
        bx = nbx;
        by = nby;
        p += noff[found];
    }
    return chain;
}

}  // namespace

std::vector<ContourChain> extract_contour(const InstanceMask& mask) {
    // Scratch buffers reused across calls; contour extraction runs per
    // instance in tight rendering loops and allocation would dominate.
    thread_local std::vector<RowSeg> segs, bsegs;
    thread_local std::vector<uint8_t> bm, seen;
    thread_local SegDsu fdsu, bdsu;

    // Foreground row segments in image coordinates, raster order. Segments
    // from back-to-back runs on one row are merged so same-row adjacency
    // never needs a union step. `row_split` records whether any row carries
    // more than one segment; without such a row the background cannot be
    // pinched off anywhere, so the mask has no holes.
    segs.clear();
    bool row_split = false;
    {
        const int mw = mask.width;
        size_t pos = 0;
        bool on = false;
        for (uint32_t r : mask.runs) {
            if (on && r > 0) {
                const int first = static_cast<int>(pos), last = static_cast<int>(pos + r - 1);
                const int fy = first / mw, ly = last / mw;
                for (int y = fy; y <= ly; ++y) {
                    const int sx = y == fy ? first % mw : 0;
                    const int ex = y == ly ? last % mw : mw - 1;
                    if (!segs.empty() && segs.back().y == y) {
                        if (segs.back().x1 + 1 >= sx) {
                            segs.back().x1 = ex;
                            continue;
                        }
                        row_split = true;
                    }
                    segs.push_back({y, sx, ex});
                }
            }
            pos += r;
            on = !on;
        }
    }
    if (segs.empty()) return {};

    // Work on a bounding-box crop with a one-pixel padding ring so tracing
    // cost scales with the instance, not the full image. The ring keeps the
    // outside background connected to the crop border, so hole detection
    // (background components not touching the border) is unchanged.
    int bx0 = segs.front().x0, bx1 = segs.front().x1;
    for (const auto& s : segs) {
        bx0 = std::min(bx0, s.x0);
        bx1 = std::max(bx1, s.x1);
    }
    const int ox = bx0 - 1, oy = segs.front().y - 1;
    const int w = bx1 - bx0 + 3, h = segs.back().y - segs.front().y + 3;
    for (auto& s : segs) {
        s.y -= oy;
        s.x0 -= ox;
        s.x1 -= ox;
    }

    bm.assign(static_cast<size_t>(w) * h, 0);
    for (const auto& s : segs) {
        auto row = bm.begin() + static_cast<size_t>(s.y) * w;
        std::fill(row + s.x0, row + s.x1 + 1, 1);
    }

    // 8-connected foreground components; the first segment of each component
    // in raster order starts at the component's raster-first pixel.
    std::vector<std::pair<int, int>> seeds;
    bool has_holes = false;
    if (!row_split) {
        // One segment per occupied row: components are maximal runs of
        // vertically adjacent, 8-overlapping segments, and holes are
        // impossible.
        seeds.emplace_back(segs[0].x0, segs[0].y);
        for (size_t k = 1; k < segs.size(); ++k)
            if (segs[k].y != segs[k - 1].y + 1 || segs[k - 1].x1 + 1 < segs[k].x0 ||
                segs[k].x1 + 1 < segs[k - 1].x0)
                seeds.emplace_back(segs[k].x0, segs[k].y);
    } else {
        fdsu.reset(segs.size());
        link_adjacent_rows(segs, fdsu, 1);
        seen.assign(segs.size(), 0);
        for (size_t k = 0; k < segs.size(); ++k) {
            const int r = fdsu.find(static_cast<int>(k));
            if (!seen[r]) {
                seen[r] = 1;
                seeds.emplace_back(segs[k].x0, segs[k].y);
            }
        }

        // 4-connected background components over the crop (the padding ring
        // is a single connected frame, so exactly one background component
        // means no holes). Background segments are the per-row complement of
        // `segs`.
        bsegs.clear();
        {
            size_t i = 0;
            for (int y = 0; y < h; ++y) {
                int cur = 0;
                while (i < segs.size() && segs[i].y == y) {
                    if (segs[i].x0 > cur) bsegs.push_back({y, cur, segs[i].x0 - 1});
                    cur = segs[i].x1 + 1;
                    ++i;
                }
                if (cur <= w - 1) bsegs.push_back({y, cur, w - 1});
            }
        }
        bdsu.reset(bsegs.size());
        link_adjacent_rows(bsegs, bdsu, 0);
        for (size_t k = 0; k < bsegs.size() && !has_holes; ++k)
            if (bdsu.find(static_cast<int>(k)) != 0) has_holes = true;
    }

    const uint64_t max_steps = 4ull * w * h + 16;
    std::vector<ContourChain> chains;
    auto inside_fg = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h && bm[static_cast<size_t>(y) * w + x] != 0;
    };

    if (!has_holes) {
        // A Moore trace only steps between 8-adjacent foreground pixels, so
        // with a plain foreground predicate it stays inside the seed's
        // component and no label raster is needed.
        for (auto [sx, sy] : seeds) {
            ContourChain cc;
            cc.pixels = moore_trace_bitmap(bm.data(), w, sx, sy, ox, oy, max_steps);
            chains.push_back(std::move(cc));
        }
        return chains;
    }
    {
        // Holes present: build full label rasters so hole boundaries can be
        // traced within their own background component.
        std::vector<int> label(bm.size(), 0);
        std::vector<size_t> stack;
        int ncomp = 0;
        for (auto [sx, sy] : seeds) {
            ++ncomp;
            size_t s0 = static_cast<size_t>(sy) * w + sx;
            stack.assign(1, s0);
            label[s0] = ncomp;
            while (!stack.empty()) {
                size_t p = stack.back();
                stack.pop_back();
                int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
                for (int d = 0; d < 8; ++d) {
                    int px = x + kDx[d], py = y + kDy[d];
                    if (inside_fg(px, py)) {
                        size_t q = static_cast<size_t>(py) * w + px;
                        if (label[q] == 0) {
                            label[q] = ncomp;
                            stack.push_back(q);
                        }
                    }
                }
            }
        }
        for (int c = 1; c <= ncomp; ++c) {
            auto [sx, sy] = seeds[c - 1];
            auto inside = [&](int x, int y) {
                return x >= 0 && x < w && y >= 0 && y < h &&
                       label[static_cast<size_t>(y) * w + x] == c;
            };
            ContourChain cc;
            cc.pixels = moore_trace(sx, sy, inside, max_steps);
            chains.push_back(std::move(cc));
        }
        // Hole chains trace the enclosed background components, in raster
        // order of their first pixel.
        std::vector<int> blabel(bsegs.size());
        for (size_t k = 0; k < bsegs.size(); ++k) blabel[k] = bdsu.find(static_cast<int>(k));
        std::vector<uint8_t> bseen(bsegs.size(), 0);
        std::vector<int> bglabel(bm.size(), 0);
        for (size_t k = 0; k < bsegs.size(); ++k) {
            auto row = bglabel.begin() + static_cast<size_t>(bsegs[k].y) * w;
            std::fill(row + bsegs[k].x0, row + bsegs[k].x1 + 1, blabel[k] + 1);
        }
        for (size_t k = 0; k < bsegs.size(); ++k) {
            const int r = blabel[k];
            if (r == 0 || bseen[r]) continue;  // root 0 = the outside frame
            bseen[r] = 1;
            auto inside = [&](int x, int y) {
                return x >= 0 && x < w && y >= 0 && y < h &&
                       bglabel[static_cast<size_t>(y) * w + x] == r + 1;
            };
            ContourChain cc;
            cc.pixels = moore_trace(bsegs[k].x0, bsegs[k].y, inside, max_steps);
            cc.is_hole = true;
            chains.push_back(std::move(cc));
        }
    }
    for (auto& cc : chains)
        for (auto& [px, py] : cc.pixels) {
            px += ox;
            py += oy;
        }
    return chains;
}

std::vector<uint32_t> to_coco_rle(const InstanceMask& mask) {
    auto bm = mask.to_bitmap();
    std::vector<uint32_t> counts;
    bool cur_fg = false;
    uint32_t len = 0;
    for (int x = 0; x < mask.width; ++x)
        for (int y = 0; y < mask.height; ++y) {
            bool fgv = bm[static_cast<size_t>(y) * mask.width + x] != 0;
            if (fgv == cur_fg) {
                ++len;
            } else {
                counts.push_back(len);
                cur_fg = fgv;
                len = 1;
            }
        }
    counts.push_back(len);
    return counts;
}

std::vector<std::vector<size_t>> overlap_clusters(const Scene& scene) {
    size_t n = scene.instances.size();
    std::vector<size_t> parent(n);
    std::iota(parent.begin(), parent.end(), size_t{0});
    auto find = [&](size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (mask_intersection(scene.instances[i], scene.instances[j]) > 0) {
                size_t ra = find(i), rb = find(j);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
    std::vector<std::vector<size_t>> clusters;
    std::vector<int> slot(n, -1);
    for (size_t i = 0; i < n; ++i) {
        size_t r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<int>(clusters.size());
            clusters.emplace_back();
        }
        clusters[slot[r]].push_back(i);
    }
    return clusters;
}

}  // namespace pluforge
