#include <cstdio>
#include <cstdlib>
#include <cmath>
#include "carnot/solver.hpp"
#include "carnot/vector_field.hpp"
using namespace carnot;
int main(int argc, char** argv) {
  double box = atof(argv[1]), boxv = atof(argv[2]), t1 = atof(argv[3]), sigma = atof(argv[4]);
  int nh1 = atoi(argv[5]), nv1 = atoi(argv[6]), nh2 = atoi(argv[7]), nv2 = atoi(argv[8]);
  auto g = CarnotGroup::build(heisenberg_law_spec(1));
  auto fs = FieldSet::from(g, horizontal_fields(g));
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Identity(2, 2);
  SolveConfig cfg;
  auto grid = [&](int nh, int nv) {
    GridSpec gr;
    for (int i = 0; i < 3; ++i) {
      bool hor = g.weight(i) == 1;
      gr.lo.push_back(hor ? -box : -boxv); gr.hi.push_back(hor ? box : boxv);
      gr.nodes.push_back(hor ? nh : nv);
    }
    gr.t0 = 0; gr.t1 = t1; gr.time_nodes = 17;
    return gr;
  };
  for (auto [nh, nv] : {std::pair{nh1, nv1}, std::pair{nh2, nv2}}) {
    if (nh <= 0) continue;
    auto run = heat_kernel_estimate(g, fs, a0, grid(nh, nv), cfg, sigma);
    std::printf("n=(%2d,%2d) steps=%llu C=%.4f b=%.4f drift=%.2e far=%.2e min/max=%.2e ptwsup=%.3f ptwC=%.3f\n",
      nh, nv, (unsigned long long)run.result.steps, run.fit.C, run.fit.b,
      run.mass_drift_per_step, run.far_field_mass,
      run.result.min_value / run.result.max_value, run.fit.pointwise_sup, run.fit.pointwise_C);
  }
  return 0;
}
