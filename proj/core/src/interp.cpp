#include "radfuse/interp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace radfuse {
namespace {

constexpr int kGhost = -1;

struct Site {
  std::int64_t u;
  std::int64_t v;
};

std::int64_t orient(const Site& a, const Site& b, const Site& c) {
  return (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
}

// > 0 iff d lies strictly inside the circumcircle of the CCW triangle abc.
bool in_circle(const Site& a, const Site& b, const Site& c, const Site& d) {
  __extension__ typedef __int128 i128;
  const i128 adx = a.u - d.u, ady = a.v - d.v;
  const i128 bdx = b.u - d.u, bdy = b.v - d.v;
  const i128 cdx = c.u - d.u, cdy = c.v - d.v;
  const i128 ad = adx * adx + ady * ady;
  const i128 bd = bdx * bdx + bdy * bdy;
  const i128 cd = cdx * cdx + cdy * cdy;
  const i128 det = adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
  return det > 0;
}

// p strictly inside the open segment ab, assuming the three are collinear.
bool strictly_between(const Site& a, const Site& b, const Site& p) {
  const std::int64_t dot = (p.u - a.u) * (b.u - a.u) + (p.v - a.v) * (b.v - a.v);
  const std::int64_t len2 = (b.u - a.u) * (b.u - a.u) + (b.v - a.v) * (b.v - a.v);
  return dot > 0 && dot < len2;
}

struct Triangle {
  int v[3];
  int nbr[3];  // nbr[i] lies across the edge (v[i+1], v[i+2])
  bool alive;
};

class Triangulator {
 public:
  explicit Triangulator(std::vector<Site> sites) : sites_(std::move(sites)) {}

  void run() {
    const int n = static_cast<int>(sites_.size());
    if (n < 3) fail(ErrorCategory::kDegenerate, "log-linear interpolation needs >= 3 non-collinear samples");
    int third = -1;
    for (int k = 2; k < n; ++k) {
      if (orient(sites_[0], sites_[1], sites_[static_cast<std::size_t>(k)]) != 0) {
        third = k;
        break;
      }
    }
    if (third < 0) fail(ErrorCategory::kDegenerate, "log-linear interpolation input is collinear");
    seed(0, 1, third);
    for (int k = 2; k < n; ++k) {
      if (k != third) insert(k);
    }
  }

  std::vector<std::array<int, 3>> real_triangles() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) {
      if (t.alive && !is_ghost(t)) out.push_back({t.v[0], t.v[1], t.v[2]});
    }
    return out;
  }

 private:
  static bool is_ghost(const Triangle& t) { return t.v[0] == kGhost || t.v[1] == kGhost || t.v[2] == kGhost; }

  const Site& site(int i) const { return sites_[static_cast<std::size_t>(i)]; }

  bool contains_in_circumcircle(const Triangle& t, const Site& p) const {
    for (int g = 0; g < 3; ++g) {
      if (t.v[g] != kGhost) continue;
      const Site& a = site(t.v[(g + 1) % 3]);
      const Site& b = site(t.v[(g + 2) % 3]);
      const std::int64_t o = orient(a, b, p);
      return o > 0 || (o == 0 && strictly_between(a, b, p));
    }
    return in_circle(site(t.v[0]), site(t.v[1]), site(t.v[2]), p);
  }

  int add(int a, int b, int c) {
    tris_.push_back({{a, b, c}, {-1, -1, -1}, true});
    mark_.push_back(0);
    return static_cast<int>(tris_.size()) - 1;
  }

  void seed(int a, int b, int c) {
    if (orient(site(a), site(b), site(c)) < 0) std::swap(b, c);
    const int t0 = add(a, b, c);
    const int verts[3] = {a, b, c};
    int ghosts[3];
    for (int i = 0; i < 3; ++i) {
      const int x = verts[(i + 1) % 3];
      const int y = verts[(i + 2) % 3];
      ghosts[i] = add(y, x, kGhost);
      tris_[static_cast<std::size_t>(t0)].nbr[i] = ghosts[i];
      tris_[static_cast<std::size_t>(ghosts[i])].nbr[2] = t0;
    }
    // Ghost (y, x, G): across (x, G) is the ghost whose first vertex is x.
    for (int i = 0; i < 3; ++i) {
      auto& g = tris_[static_cast<std::size_t>(ghosts[i])];
      for (int j = 0; j < 3; ++j) {
        if (j == i) continue;
        const auto& h = tris_[static_cast<std::size_t>(ghosts[j])];
        if (h.v[0] == g.v[1]) g.nbr[0] = ghosts[j];
        if (h.v[1] == g.v[0]) g.nbr[1] = ghosts[j];
      }
    }
    hint_ = t0;
  }

  int locate(const Site& p) {
    int t = hint_;
    const std::size_t cap = tris_.size() + 16;
    for (std::size_t step = 0; step < cap; ++step) {
      const Triangle& tri = tris_[static_cast<std::size_t>(t)];
      if (is_ghost(tri)) return t;
      bool moved = false;
      for (int r = 0; r < 3; ++r) {
        const int k = (r + static_cast<int>(step)) % 3;
        if (orient(site(tri.v[(k + 1) % 3]), site(tri.v[(k + 2) % 3]), p) < 0) {
          t = tri.nbr[k];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    return -1;
  }

  void insert(int pi) {
    const Site& p = site(pi);
    int start = locate(p);
    if (start < 0 || !contains_in_circumcircle(tris_[static_cast<std::size_t>(start)], p)) {
      start = -1;
      for (std::size_t i = 0; i < tris_.size(); ++i) {
        if (tris_[i].alive && contains_in_circumcircle(tris_[i], p)) {
          start = static_cast<int>(i);
          break;
        }
      }
      if (start < 0) fail(ErrorCategory::kNumeric, "triangulation: no triangle conflicts with inserted site");
    }

    ++stamp_;
    cavity_.clear();
    cavity_.push_back(start);
    mark_[static_cast<std::size_t>(start)] = stamp_;
    for (std::size_t head = 0; head < cavity_.size(); ++head) {
      const Triangle& t = tris_[static_cast<std::size_t>(cavity_[head])];
      for (int nb : t.nbr) {
        if (mark_[static_cast<std::size_t>(nb)] == stamp_) continue;
        if (contains_in_circumcircle(tris_[static_cast<std::size_t>(nb)], p)) {
          mark_[static_cast<std::size_t>(nb)] = stamp_;
          cavity_.push_back(nb);
        }
      }
    }

    created_.clear();
    for (int c : cavity_) {
      for (int k = 0; k < 3; ++k) {
        const Triangle t = tris_[static_cast<std::size_t>(c)];
        const int outside = t.nbr[k];
        if (mark_[static_cast<std::size_t>(outside)] == stamp_) continue;
        const int a = t.v[(k + 1) % 3];
        const int b = t.v[(k + 2) % 3];
        if (a != kGhost && b != kGhost && orient(site(a), site(b), p) <= 0) {
          fail(ErrorCategory::kNumeric, "triangulation: cavity is not star-shaped");
        }
        const int nt = add(a, b, pi);
        mark_.back() = 0;
        tris_[static_cast<std::size_t>(nt)].nbr[2] = outside;
        auto& o = tris_[static_cast<std::size_t>(outside)];
        for (int j = 0; j < 3; ++j) {
          if (o.v[(j + 1) % 3] == b && o.v[(j + 2) % 3] == a) o.nbr[j] = nt;
        }
        created_.push_back(nt);
      }
    }

    // The cavity boundary is a closed cycle: each vertex starts one new
    // triangle and ends one.
    for (int nt : created_) {
      auto& t = tris_[static_cast<std::size_t>(nt)];
      for (int other : created_) {
        const auto& s = tris_[static_cast<std::size_t>(other)];
        if (s.v[0] == t.v[1]) t.nbr[0] = other;
        if (s.v[1] == t.v[0]) t.nbr[1] = other;
      }
    }
    for (int c : cavity_) tris_[static_cast<std::size_t>(c)].alive = false;
    for (int nt : created_) {
      if (!is_ghost(tris_[static_cast<std::size_t>(nt)])) {
        hint_ = nt;
        break;
      }
    }
  }

  std::vector<Site> sites_;
  std::vector<Triangle> tris_;
  std::vector<int> mark_;
  std::vector<int> cavity_;
  std::vector<int> created_;
  int stamp_ = 0;
  int hint_ = 0;
};

}  // namespace

TriangulationResult triangulate_log_depth(const DepthImage& sparse) {
  TriangulationResult result;
  std::vector<Site> sites;
  for (int v = 0; v < sparse.height(); ++v) {
    for (int u = 0; u < sparse.width(); ++u) {
      if (!sparse.valid(u, v)) continue;
      const double d = sparse.at(u, v);
      require(std::isfinite(d) && d > 0.0, ErrorCategory::kParameter, "interpolation input depths must be > 0");
      sites.push_back({u, v});
      result.vertices.push_back({u, v, std::log(d)});
    }
  }
  Triangulator tri(std::move(sites));
  tri.run();
  result.triangles = tri.real_triangles();
  return result;
}

DepthImage rasterize_log_linear(const TriangulationResult& tri, int width, int height) {
  DepthImage out(width, height);
  for (const auto& t : tri.triangles) {
    const auto& a = tri.vertices[static_cast<std::size_t>(t[0])];
    const auto& b = tri.vertices[static_cast<std::size_t>(t[1])];
    const auto& c = tri.vertices[static_cast<std::size_t>(t[2])];
    const Site sa{a.u, a.v}, sb{b.u, b.v}, sc{c.u, c.v};
    const std::int64_t area = orient(sa, sb, sc);
    if (area <= 0) continue;
    const double lo = std::min({a.log_depth, b.log_depth, c.log_depth});
    const double hi = std::max({a.log_depth, b.log_depth, c.log_depth});
    const int u0 = std::max(0, std::min({a.u, b.u, c.u}));
    const int u1 = std::min(width - 1, std::max({a.u, b.u, c.u}));
    const int v0 = std::max(0, std::min({a.v, b.v, c.v}));
    const int v1 = std::min(height - 1, std::max({a.v, b.v, c.v}));
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        if (out.valid(u, v)) continue;
        const Site p{u, v};
        const std::int64_t wa = orient(sb, sc, p);
        const std::int64_t wb = orient(sc, sa, p);
        const std::int64_t wc = orient(sa, sb, p);
        if (wa < 0 || wb < 0 || wc < 0) continue;
        const double inv = 1.0 / static_cast<double>(area);
        double l = static_cast<double>(wa) * inv * a.log_depth + static_cast<double>(wb) * inv * b.log_depth +
                   static_cast<double>(wc) * inv * c.log_depth;
        if (wa == area) l = a.log_depth;
        if (wb == area) l = b.log_depth;
        if (wc == area) l = c.log_depth;
        out.set(u, v, std::exp(std::clamp(l, lo, hi)));
      }
    }
  }
  return out;
}

DepthImage interpolate_log_linear(const DepthImage& sparse_gt) {
  const TriangulationResult tri = triangulate_log_depth(sparse_gt);
  DepthImage out = rasterize_log_linear(tri, sparse_gt.width(), sparse_gt.height());
  // Samples are reproduced from the input rather than through exp(log(d)).
  for (const auto& vtx : tri.vertices) out.set(vtx.u, vtx.v, sparse_gt.at(vtx.u, vtx.v));
  return out;
}

}  // namespace radfuse
