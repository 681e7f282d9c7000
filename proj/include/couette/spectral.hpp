#pragma once

#include <functional>
#include <vector>

#include "couette/types.hpp"

namespace couette {

struct ChebGrid {
  int order = 0;            // N
  RVec nodes;               // y_j = cos(j pi / N), descending
  RVec quad_weights;        // Clenshaw-Curtis

  int size() const { return order + 1; }
};

struct DiffOps {
  RMat d1, d2, d4;
};

enum class WeightKind { rho_k, tilde_rho_k, cutoff_rho, cutoff_chi };

struct WeightParams {
  double L = 1.0;       // rho_k, tilde_rho_k
  double lambda = 0.0;  // cutoffs
  double delta = 1.0;
};

struct WeightProfile {
  WeightKind kind;
  WeightParams params;
  RVec values;
};

// Largest order the dense solvers accept.
inline constexpr int kMaxOrder = 1024;

// Chebyshev-Lobatto points for any n >= 1 (no quadrature attached).
RVec chebyshev_nodes(int n);

ChebGrid build_grid(int N);
DiffOps build_diff_ops(const ChebGrid& grid);

// Default order for a solve at (nu, k): max(64, ceil(8 L)); throws above kMaxOrder.
int grid_order_for(double nu, double k);

cplx quadrature(const ChebGrid& grid, const Vec& values);
double quadrature(const ChebGrid& grid, const RVec& values);

// Discrete inner product <f, g> = int f conj(g).
cplx inner(const ChebGrid& grid, const Vec& f, const Vec& g);
double l2_norm(const ChebGrid& grid, const Vec& f);

double weight_at(WeightKind kind, const WeightParams& p, double y);
WeightProfile weight_values(WeightKind kind, const WeightParams& params, const ChebGrid& grid);

// Barycentric interpolation of nodal data to arbitrary points.
Vec interpolate(const ChebGrid& grid, const Vec& values, const RVec& points);

// sqrt(int |f|^2 g dy) with f given by nodal values and g a weight that may
// blow up like (1-|y|)^{-1/2} at the walls. Panels split at `breaks`; the end
// panels use y = +-(1 - t^2) so the endpoint singularity is removed.
double weighted_l2(const ChebGrid& grid, const Vec& values,
                   const std::function<double(double)>& weight,
                   const std::vector<double>& breaks = {});

// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, RVec& x, RVec& w);

}  // namespace couette
