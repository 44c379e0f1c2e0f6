#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlqw/experiments.hpp"
#include "nlqw/rng.hpp"
#include "nlqw/smoothness.hpp"

namespace py = pybind11;
using namespace nlqw;

namespace {

SpinorField field_from_array(const LatticeGrid& g, const Eigen::VectorXcd& v) {
  return SpinorField(g, v);
}

CoinField coin_from_preset(const LatticeGrid& g, const std::string& preset, double kappa,
                           double kappa0, double width) {
  if (preset == "free") return make_free_coin(g, kappa);
  if (preset == "kls-window") return make_kls_window(g, kappa, kappa0, width);
  if (preset == "kls-origin") return make_kls_origin(g, kappa, kappa0);
  if (preset == "identity") return make_identity_coin(g);
  throw std::invalid_argument("unknown preset: " + preset);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "nonlinear quantum walk laboratory (C++ core)";

  py::class_<LatticeGrid>(m, "LatticeGrid")
      .def(py::init<int>(), py::arg("half_width"))
      .def_readonly("L", &LatticeGrid::L)
      .def_property_readonly("sites", &LatticeGrid::sites)
      .def_property_readonly("dim", &LatticeGrid::dim);

  py::class_<SpinorField>(m, "SpinorField")
      .def(py::init(&field_from_array), py::arg("grid"), py::arg("values"))
      .def_readonly("grid", &SpinorField::grid)
      .def_property_readonly("values", [](const SpinorField& u) { return u.v; })
      .def("norm", &SpinorField::norm)
      .def("weighted_norm",
           [](const SpinorField& u, double p, double s) { return weighted_norm(u, p, s); },
           py::arg("p"), py::arg("s") = 0.0)
      .def("boundary_mass", [](const SpinorField& u) { return boundary_mass(u); });

  m.def("delta_field", &delta_field, py::arg("grid"), py::arg("x"), py::arg("up"),
        py::arg("down"));
  m.def("random_unit_field", &random_unit_field, py::arg("grid"), py::arg("seed"),
        py::arg("stream") = 0);
  m.def("inner", &inner);
  m.def("real_inner", &real_inner);
  m.def("zigzag", &zigzag);
  m.def("proj_plus", [](const SpinorField& u) { return proj_pm(u, Sign::plus); });
  m.def("proj_minus", [](const SpinorField& u) { return proj_pm(u, Sign::minus); });
  m.def("write_snapshot", &write_snapshot);
  m.def("read_snapshot", &read_snapshot);

  py::class_<CoinField>(m, "CoinField")
      .def_readonly("grid", &CoinField::grid)
      .def_readonly("alpha_inf", &CoinField::alpha_inf)
      .def_readonly("beta_inf", &CoinField::beta_inf)
      .def("l11_perturbation", &CoinField::l11_perturbation);
  m.def("make_coin", &coin_from_preset, py::arg("grid"), py::arg("preset"),
        py::arg("kappa") = 0.6435, py::arg("kappa0") = 1.2, py::arg("width") = 3.0);

  py::class_<NonlinearCoin>(m, "NonlinearCoin")
      .def(py::init([](const std::string& gamma, double c, int p) {
             Eigen::Matrix2cd g = (gamma == "sigma1") ? NonlinearCoin::sigma1()
                                                      : NonlinearCoin::sigma3();
             return NonlinearCoin(g, c, p);
           }),
           py::arg("gamma") = "sigma3", py::arg("c") = 1.0, py::arg("p") = 3);

  m.def("shift", &shift);
  m.def("apply_U", &apply_U);
  m.def("apply_N", &apply_N);
  m.def("step", &step);
  m.def("double_step", &double_step);

  py::class_<SpectralData>(m, "SpectralData")
      .def_property_readonly("angles", [](const SpectralData& sd) { return sd.angles; })
      .def_readonly("discrete_indices", &SpectralData::discrete_indices)
      .def_readonly("lambda_plus", &SpectralData::lambda_plus)
      .def_readonly("phi", &SpectralData::phi)
      .def_readonly("phi_plus", &SpectralData::phi_plus)
      .def_readonly("band_cos", &SpectralData::band_cos);
  m.def("full_spectrum", &full_spectrum, py::arg("coin"), py::arg("dense_cap") = 8192);
  m.def("decay_rate", &decay_rate);
  m.def("Pc", &Pc);

  py::class_<BoundStateFamily>(m, "BoundStateFamily")
      .def_readonly("lambda_", &BoundStateFamily::lambda)
      .def_readonly("r_max", &BoundStateFamily::r_max)
      .def_readonly("phi_plus", &BoundStateFamily::phi_plus)
      .def("eval_Phi", &BoundStateFamily::eval_Phi)
      .def("eval_Lambda", &BoundStateFamily::eval_Lambda)
      .def("eval_Phi_plus", &BoundStateFamily::eval_Phi_plus)
      .def("eval_Lambda_plus", &BoundStateFamily::eval_Lambda_plus);
  m.def(
      "build_family",
      [](const SpectralData& sd, const NonlinearCoin& nl, double r_max, int nodes) {
        FamilyOptions fo;
        fo.r_max = r_max;
        fo.nodes = nodes;
        return build_family(sd, nl, fo);
      },
      py::arg("spectral"), py::arg("nonlinearity"), py::arg("r_max") = 0.01,
      py::arg("nodes") = 32);

  py::class_<ModulationState>(m, "ModulationState")
      .def_readonly("z", &ModulationState::z)
      .def_readonly("xi", &ModulationState::xi)
      .def_readonly("eta", &ModulationState::eta)
      .def_readonly("newton_iters", &ModulationState::newton_iters);
  m.def("decompose",
        [](const BoundStateFamily& fam, const SpinorField& u, cplx guess) {
          return decompose(fam, u, guess);
        });
  m.def("apply_R", &apply_R);

  m.def("haar_unitary", &haar_unitary);
  m.def("qty_time", &qty_time);
  m.def("qty_resolvent",
        [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& u, const Eigen::VectorXcd& phi,
           double eps, int m2) { return qty_resolvent(a, eig_unitary(u), phi, eps, m2); });
  m.def("stone_projection",
        [](const Eigen::MatrixXcd& u, double a, double b, const std::vector<double>& eps) {
          return stone_projection(eig_unitary(u), a, b, eps);
        });
}
