#include "sfe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace sfe {

namespace {

struct Tri {
  int a, b, c;
};

double orient2d(const Vec2& p, const Vec2& q, const Vec2& r) {
  return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
}

bool in_circumcircle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double ax = a[0] - p[0], ay = a[1] - p[1];
  const double bx = b[0] - p[0], by = b[1] - p[1];
  const double cx = c[0] - p[0], cy = c[1] - p[1];
  const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                     (bx * bx + by * by) * (ax * cy - cx * ay) +
                     (cx * cx + cy * cy) * (ax * by - bx * ay);
  // Sign convention depends on the triangle orientation.
  return orient2d(a, b, c) > 0.0 ? det > 0.0 : det < 0.0;
}

// Bowyer-Watson with a super-triangle; deterministic insertion order.
std::vector<Tri> delaunay(const std::vector<Vec2>& pts) {
  Vec2 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double span = std::max((hi - lo).maxCoeff(), 1e-12);
  const Vec2 mid = 0.5 * (lo + hi);

  std::vector<Vec2> v = pts;
  const int s0 = static_cast<int>(v.size());
  v.push_back(mid + Vec2(-20.0 * span, -10.0 * span));
  v.push_back(mid + Vec2(20.0 * span, -10.0 * span));
  v.push_back(mid + Vec2(0.0, 20.0 * span));

  std::vector<Tri> tris = {{s0, s0 + 1, s0 + 2}};
  for (int i = 0; i < s0; ++i) {
    std::vector<Tri> bad, keep;
    for (const auto& t : tris) {
      if (in_circumcircle(v[i], v[t.a], v[t.b], v[t.c]))
        bad.push_back(t);
      else
        keep.push_back(t);
    }
    // Boundary of the cavity: edges appearing in exactly one bad triangle.
    std::vector<std::pair<int, int>> edges;
    for (const auto& t : bad) {
      const int e[3][2] = {{t.a, t.b}, {t.b, t.c}, {t.c, t.a}};
      for (const auto& ed : e) {
        auto rev = std::make_pair(ed[1], ed[0]);
        auto it = std::find(edges.begin(), edges.end(), rev);
        if (it != edges.end())
          edges.erase(it);
        else
          edges.emplace_back(ed[0], ed[1]);
      }
    }
    tris = std::move(keep);
    for (const auto& [ea, eb] : edges) tris.push_back({ea, eb, i});
  }

  std::vector<Tri> out;
  for (const auto& t : tris) {
    if (t.a >= s0 || t.b >= s0 || t.c >= s0) continue;
    Tri tt = t;
    if (orient2d(v[tt.a], v[tt.b], v[tt.c]) < 0.0) std::swap(tt.b, tt.c);
    out.push_back(tt);
  }
  // Normalize ordering for determinism.
  for (auto& t : out) {
    int m = std::min({t.a, t.b, t.c});
    while (t.a != m) {
      const int tmp = t.a;
      t.a = t.b;
      t.b = t.c;
      t.c = tmp;
    }
  }
  std::sort(out.begin(), out.end(), [](const Tri& x, const Tri& y) {
    return std::tie(x.a, x.b, x.c) < std::tie(y.a, y.b, y.c);
  });
  return out;
}

double quad_quality(const std::vector<Vec2>& pts, const std::array<int, 4>& q) {
  // Minimum corner-angle sine; non-convex quads score <= 0.
  double quality = 1.0;
  for (int k = 0; k < 4; ++k) {
    const Vec2& prev = pts[q[(k + 3) % 4]];
    const Vec2& cur = pts[q[k]];
    const Vec2& next = pts[q[(k + 1) % 4]];
    const Vec2 u = next - cur, w = prev - cur;
    const double cross = u[0] * w[1] - u[1] * w[0];
    const double denom = u.norm() * w.norm();
    if (denom <= 0.0) return -1.0;
    quality = std::min(quality, cross / denom);
  }
  return quality;
}

}  // namespace

Mesh build_sensor_mesh(const std::vector<Vec2>& sensor_positions, double width,
                       double height, double hole_radius) {
  if (sensor_positions.size() < 3)
    throw NumericalError("cannot mesh fewer than 3 sensor locations");

  std::vector<Vec2> pts = sensor_positions;
  const int n_sen = static_cast<int>(pts.size());
  const double tol = 1e-9 * width;

  // Dirichlet anchors on the fixed left edge (displacement known to vanish).
  std::vector<Vec2> anchors = {{0.0, 0.0}, {0.0, 0.5 * height}, {0.0, height}};
  for (const auto& a : anchors) {
    bool dup = false;
    for (const auto& p : pts) dup = dup || (p - a).norm() < tol;
    if (!dup) pts.push_back(a);
  }

  const auto tris = delaunay(pts);

  const Vec2 center(0.5 * width, 0.5 * height);
  std::vector<Tri> kept;
  for (const auto& t : tris) {
    const Vec2 centroid = (pts[t.a] + pts[t.b] + pts[t.c]) / 3.0;
    if ((centroid - center).norm() < hole_radius) continue;  // spans the hole
    if (std::abs(orient2d(pts[t.a], pts[t.b], pts[t.c])) < 1e-12 * width * width)
      continue;  // sliver
    kept.push_back(t);
  }
  if (kept.empty()) throw NumericalError("sensor triangulation is empty");

  // Greedy pairwise merge of adjacent triangles into convex quads.
  struct Candidate {
    double quality;
    int t1, t2;
    std::array<int, 4> quad;
  };
  std::vector<Candidate> candidates;
  for (size_t i = 0; i < kept.size(); ++i)
    for (size_t j = i + 1; j < kept.size(); ++j) {
      const int vi[3] = {kept[i].a, kept[i].b, kept[i].c};
      std::vector<int> shared;
      for (int x : vi)
        if (x == kept[j].a || x == kept[j].b || x == kept[j].c) shared.push_back(x);
      if (shared.size() != 2) continue;
      int apex_i = kept[i].a + kept[i].b + kept[i].c - shared[0] - shared[1];
      int apex_j = kept[j].a + kept[j].b + kept[j].c - shared[0] - shared[1];
      std::array<int, 4> quad = {apex_i, shared[0], apex_j, shared[1]};
      if (orient2d(pts[quad[0]], pts[quad[1]], pts[quad[2]]) < 0.0)
        std::swap(quad[1], quad[3]);
      const double q = quad_quality(pts, quad);
      if (q > 0.17)  // roughly 10 degrees minimum corner angle
        candidates.push_back({q, static_cast<int>(i), static_cast<int>(j), quad});
    }
  std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
    if (x.quality != y.quality) return x.quality > y.quality;
    return std::tie(x.t1, x.t2) < std::tie(y.t1, y.t2);
  });

  std::vector<bool> used(kept.size(), false);
  Mesh mesh;
  mesh.nodes = pts;
  for (const auto& c : candidates) {
    if (used[c.t1] || used[c.t2]) continue;
    used[c.t1] = used[c.t2] = true;
    mesh.elements.push_back(c.quad);
  }
  for (size_t i = 0; i < kept.size(); ++i) {
    if (used[i]) continue;
    mesh.elements.push_back({kept[i].a, kept[i].b, kept[i].c, kept[i].c});
  }

  std::set<int> dirichlet;
  for (int n = 0; n < mesh.n_nodes(); ++n)
    if (std::abs(mesh.nodes[n][0]) < tol) {
      dirichlet.insert(2 * n);
      dirichlet.insert(2 * n + 1);
    }
  mesh.dirichlet_dofs.assign(dirichlet.begin(), dirichlet.end());

  // Boundary edges on the loaded right edge: shared by exactly one element.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& conn : mesh.elements)
    for (int le = 0; le < 4; ++le) {
      int a = conn[le], b = conn[(le + 1) % 4];
      if (a == b) continue;
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& conn = mesh.elements[e];
    for (int le = 0; le < 4; ++le) {
      int a = conn[le], b = conn[(le + 1) % 4];
      if (a == b) continue;
      if (edge_count[{std::min(a, b), std::max(a, b)}] != 1) continue;
      if (std::abs(mesh.nodes[a][0] - width) < 1e-6 * width &&
          std::abs(mesh.nodes[b][0] - width) < 1e-6 * width)
        mesh.neumann_edges.emplace_back(e, le);
    }
  }

  compute_quadrature(mesh);  // throws on degenerate elements
  return mesh;
}

}  // namespace sfe
