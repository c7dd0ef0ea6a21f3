// SPDX-License-Identifier: Apache-2.0
#pragma once

// Model problems: Poisson -lap u = f and convection-diffusion
// -lap u + c . grad u = f with Dirichlet data g = u on the boundary.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aesfem {

using Vec3 = std::array<double, 3>;

enum class PdeKind { Poisson, ConvectionDiffusion };

struct PdeSpec {
  PdeKind kind = PdeKind::Poisson;
  Vec3 c{1.0, 1.0, 1.0};

  [[nodiscard]] bool has_convection() const { return kind == PdeKind::ConvectionDiffusion; }
};

/// u1, u2, u3 are the benchmark solutions; the polynomial cases are for
/// patch tests and the zero case for sanity runs.
enum class SolutionId { U1, U2, U3, Quadratic, Linear, Zero };

inline std::string to_string(PdeKind k) { return k == PdeKind::Poisson ? "poisson" : "convdiff"; }

inline std::string to_string(SolutionId s) {
  switch (s) {
    case SolutionId::U1: return "u1";
    case SolutionId::U2: return "u2";
    case SolutionId::U3: return "u3";
    case SolutionId::Quadratic: return "quadratic";
    case SolutionId::Linear: return "linear";
    default: return "zero";
  }
}

inline PdeKind parse_pde(const std::string& s) {
  if (s == "poisson") return PdeKind::Poisson;
  if (s == "convdiff" || s == "convection-diffusion") return PdeKind::ConvectionDiffusion;
  throw std::invalid_argument("unknown pde '" + s + "' (expected poisson or convdiff)");
}

inline SolutionId parse_solution(const std::string& s) {
  for (auto id : {SolutionId::U1, SolutionId::U2, SolutionId::U3, SolutionId::Quadratic, SolutionId::Linear, SolutionId::Zero}) {
    if (to_string(id) == s) return id;
  }
  throw std::invalid_argument("unknown solution '" + s + "' (expected u1, u2, u3, quadratic, linear or zero)");
}

struct ProblemCase {
  int dim = 2;
  PdeSpec pde;
  SolutionId solution = SolutionId::U1;
  std::function<double(const Vec3&)> u;
  std::function<Vec3(const Vec3&)> grad;
  std::function<double(const Vec3&)> laplacian;
  std::function<double(const Vec3&)> f;

  [[nodiscard]] double g(const Vec3& x) const { return u(x); }
};

inline ProblemCase analytic_solution(SolutionId id, int dim, PdeSpec pde = {}) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("dimension must be 2 or 3");
  constexpr double pi = std::numbers::pi;
  ProblemCase p;
  p.dim = dim;
  p.pde = pde;
  p.solution = id;
  const bool d3 = dim == 3;

  switch (id) {
    case SolutionId::U1: {
      const double s = d3 ? 64.0 : 16.0;
      auto q = [](double t) { return t * (1.0 - t); };
      auto dq = [](double t) { return 1.0 - 2.0 * t; };
      p.u = [=](const Vec3& x) { return s * q(x[0]) * q(x[1]) * (d3 ? q(x[2]) : 1.0); };
      p.grad = [=](const Vec3& x) {
        const double z = d3 ? q(x[2]) : 1.0;
        return Vec3{s * dq(x[0]) * q(x[1]) * z, s * q(x[0]) * dq(x[1]) * z, d3 ? s * q(x[0]) * q(x[1]) * dq(x[2]) : 0.0};
      };
      p.laplacian = [=](const Vec3& x) {
        if (!d3) return -2.0 * s * (q(x[1]) + q(x[0]));
        return -2.0 * s * (q(x[1]) * q(x[2]) + q(x[0]) * q(x[2]) + q(x[0]) * q(x[1]));
      };
      break;
    }
    case SolutionId::U2: {
      p.u = [=](const Vec3& x) { return std::cos(pi * x[0]) * std::cos(pi * x[1]) * (d3 ? std::cos(pi * x[2]) : 1.0); };
      p.grad = [=](const Vec3& x) {
        const double cx = std::cos(pi * x[0]), cy = std::cos(pi * x[1]), cz = d3 ? std::cos(pi * x[2]) : 1.0;
        const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]), sz = d3 ? std::sin(pi * x[2]) : 0.0;
        return Vec3{-pi * sx * cy * cz, -pi * cx * sy * cz, -pi * cx * cy * sz};
      };
      p.laplacian = [=, u = p.u](const Vec3& x) { return -dim * pi * pi * u(x); };
      break;
    }
    case SolutionId::U3: {
      const double s = 1.0 / (std::sinh(pi) * std::cosh(pi) * (d3 ? std::cosh(pi) : 1.0));
      p.u = [=](const Vec3& x) { return s * std::sinh(pi * x[0]) * std::cosh(pi * x[1]) * (d3 ? std::cosh(pi * x[2]) : 1.0); };
      p.grad = [=](const Vec3& x) {
        const double sx = std::sinh(pi * x[0]), cx = std::cosh(pi * x[0]);
        const double sy = std::sinh(pi * x[1]), cy = std::cosh(pi * x[1]);
        const double sz = d3 ? std::sinh(pi * x[2]) : 0.0, cz = d3 ? std::cosh(pi * x[2]) : 1.0;
        return Vec3{s * pi * cx * cy * cz, s * pi * sx * sy * cz, s * pi * sx * cy * sz};
      };
      p.laplacian = [=, u = p.u](const Vec3& x) { return dim * pi * pi * u(x); };
      break;
    }
    case SolutionId::Quadratic: {
      // 2D: 1 + x - 2y + x^2 + 3xy + 2y^2; 3D adds 0.5z + xz - yz + z^2.
      p.u = [=](const Vec3& x) {
        double v = 1.0 + x[0] - 2.0 * x[1] + x[0] * x[0] + 3.0 * x[0] * x[1] + 2.0 * x[1] * x[1];
        if (d3) v += 0.5 * x[2] + x[0] * x[2] - x[1] * x[2] + x[2] * x[2];
        return v;
      };
      p.grad = [=](const Vec3& x) {
        Vec3 g{1.0 + 2.0 * x[0] + 3.0 * x[1], -2.0 + 3.0 * x[0] + 4.0 * x[1], 0.0};
        if (d3) {
          g[0] += x[2];
          g[1] -= x[2];
          g[2] = 0.5 + x[0] - x[1] + 2.0 * x[2];
        }
        return g;
      };
      p.laplacian = [=](const Vec3&) { return d3 ? 8.0 : 6.0; };
      break;
    }
    case SolutionId::Linear: {
      p.u = [=](const Vec3& x) { return 1.0 + 2.0 * x[0] - 3.0 * x[1] + (d3 ? 0.5 * x[2] : 0.0); };
      p.grad = [=](const Vec3&) { return Vec3{2.0, -3.0, d3 ? 0.5 : 0.0}; };
      p.laplacian = [](const Vec3&) { return 0.0; };
      break;
    }
    case SolutionId::Zero: {
      p.u = [](const Vec3&) { return 0.0; };
      p.grad = [](const Vec3&) { return Vec3{0.0, 0.0, 0.0}; };
      p.laplacian = [](const Vec3&) { return 0.0; };
      break;
    }
  }

  p.f = [=, lap = p.laplacian, grad = p.grad](const Vec3& x) {
    double v = -lap(x);
    if (pde.has_convection()) {
      const Vec3 g = grad(x);
      for (int k = 0; k < dim; ++k) v += pde.c[k] * g[k];
    }
    return v;
  };
  return p;
}

}  // namespace aesfem
