// Coarse-to-fine Horn-Schunck estimator with the external flow command
// calling convention: hs_flow NEIGHBOR.png TARGET.png OUT.flo
// The result maps neighbor pixels onto the target: neighbor(p) ~ target(p + w).

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include "rbpn/errors.hpp"
#include "rbpn/flow.hpp"
#include "rbpn/image.hpp"

namespace {

struct Plane {
  int h = 0;
  int w = 0;
  std::vector<double> v;
  Plane(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.0) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
  double clamped(int y, int x) const { return at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); }
  double bilinear(double y, double x) const {
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0;
    const double fx = x - x0;
    return (1 - fy) * ((1 - fx) * clamped(y0, x0) + fx * clamped(y0, x0 + 1)) +
           fy * ((1 - fx) * clamped(y0 + 1, x0) + fx * clamped(y0 + 1, x0 + 1));
  }
};

Plane luma(const rbpn::Frame& f) {
  Plane p(f.height(), f.width());
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) p.at(y, x) = 0.299 * f.at(0, y, x) + 0.587 * f.at(1, y, x) + 0.114 * f.at(2, y, x);
  }
  return p;
}

Plane half(const Plane& p) {
  Plane q((p.h + 1) / 2, (p.w + 1) / 2);
  for (int y = 0; y < q.h; ++y) {
    for (int x = 0; x < q.w; ++x) {
      q.at(y, x) = 0.25 * (p.clamped(2 * y, 2 * x) + p.clamped(2 * y, 2 * x + 1) + p.clamped(2 * y + 1, 2 * x) +
                           p.clamped(2 * y + 1, 2 * x + 1));
    }
  }
  return q;
}

Plane upsample(const Plane& p, int h, int w, double gain) {
  Plane q(h, w);
  const double sy = static_cast<double>(p.h) / h;
  const double sx = static_cast<double>(p.w) / w;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) q.at(y, x) = gain * p.bilinear((y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5);
  }
  return q;
}

// Refines (u, v) in place at one pyramid level.
void refine(const Plane& from, const Plane& to, Plane& u, Plane& v, double alpha, int warps, int iters) {
  const int h = from.h;
  const int w = from.w;
  for (int k = 0; k < warps; ++k) {
    Plane ix(h, w), iy(h, w), it(h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double wy = y + v.at(y, x);
        const double wx = x + u.at(y, x);
        ix.at(y, x) = 0.5 * (to.bilinear(wy, wx + 1) - to.bilinear(wy, wx - 1));
        iy.at(y, x) = 0.5 * (to.bilinear(wy + 1, wx) - to.bilinear(wy - 1, wx));
        it.at(y, x) = to.bilinear(wy, wx) - from.at(y, x);
      }
    }
    const Plane u0 = u;
    const Plane v0 = v;
    Plane du(h, w), dv(h, w);
    for (int i = 0; i < iters; ++i) {
      Plane ndu(h, w), ndv(h, w);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          // Smoothness acts on the total flow, data term on the increment.
          const auto avg = [&](const Plane& base, const Plane& d) {
            return 0.25 * (base.clamped(y - 1, x) + base.clamped(y + 1, x) + base.clamped(y, x - 1) +
                           base.clamped(y, x + 1) + d.clamped(y - 1, x) + d.clamped(y + 1, x) +
                           d.clamped(y, x - 1) + d.clamped(y, x + 1)) -
                   base.at(y, x);
          };
          const double ub = avg(u0, du);
          const double vb = avg(v0, dv);
          const double gx = ix.at(y, x);
          const double gy = iy.at(y, x);
          const double r = (gx * ub + gy * vb + it.at(y, x)) / (alpha * alpha + gx * gx + gy * gy);
          ndu.at(y, x) = ub - gx * r;
          ndv.at(y, x) = vb - gy * r;
        }
      }
      du = std::move(ndu);
      dv = std::move(ndv);
    }
    for (std::size_t i = 0; i < u.v.size(); ++i) {
      u.v[i] += du.v[i];
      v.v[i] += dv.v[i];
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: hs_flow NEIGHBOR.png TARGET.png OUT.flo\n";
    return 1;
  }
  try {
    std::vector<Plane> from{luma(rbpn::read_png(argv[1]))};
    std::vector<Plane> to{luma(rbpn::read_png(argv[2]))};
    if (from[0].h != to[0].h || from[0].w != to[0].w) {
      std::cerr << "error: frame sizes differ\n";
      return 2;
    }
    while (from.back().h >= 16 && from.back().w >= 16 && from.size() < 4) {
      from.push_back(half(from.back()));
      to.push_back(half(to.back()));
    }
    Plane u(from.back().h, from.back().w);
    Plane v(from.back().h, from.back().w);
    for (int level = static_cast<int>(from.size()) - 1; level >= 0; --level) {
      const Plane& a = from[static_cast<std::size_t>(level)];
      if (u.h != a.h || u.w != a.w) {
        u = upsample(u, a.h, a.w, 2.0);
        v = upsample(v, a.h, a.w, 2.0);
      }
      refine(a, to[static_cast<std::size_t>(level)], u, v, 0.05, 3, 60);
    }
    rbpn::flow::FlowField out(u.h, u.w);
    for (int y = 0; y < u.h; ++y) {
      for (int x = 0; x < u.w; ++x) {
        out.u(y, x) = static_cast<float>(u.at(y, x));
        out.v(y, x) = static_cast<float>(v.at(y, x));
      }
    }
    rbpn::flow::write_flo(out, argv[3]);
  } catch (const rbpn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
