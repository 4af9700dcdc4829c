// pybind11 surface over the core operations: training, pursuit, separation,
// patch/pyramid plumbing, metrics, storage, and the synthetic benchmarks.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xsep/metrics.hpp"
#include "xsep/pyramid.hpp"
#include "xsep/synthbench.hpp"
#include "xsep/weighted_dl.hpp"

namespace py = pybind11;
using namespace xsep;

PYBIND11_MODULE(_xsep, m) {
  m.doc() = "coupled dictionary learning and x-ray mixture separation";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  // --- types -----------------------------------------------------------------
  py::class_<dl::DictionaryTriple>(m, "DictionaryTriple")
      .def(py::init<>())
      .def_readwrite("psi_c", &dl::DictionaryTriple::psi_c)
      .def_readwrite("phi_c", &dl::DictionaryTriple::phi_c)
      .def_readwrite("phi", &dl::DictionaryTriple::phi)
      .def_property_readonly("n", &dl::DictionaryTriple::n)
      .def_property_readonly("gamma", &dl::DictionaryTriple::gamma)
      .def_property_readonly("d", &dl::DictionaryTriple::d);

  py::class_<dl::TrainingSet>(m, "TrainingSet")
      .def(py::init<>())
      .def_readwrite("Y", &dl::TrainingSet::Y)
      .def_readwrite("X", &dl::TrainingSet::X);

  py::class_<dl::CodeMatrices>(m, "CodeMatrices")
      .def(py::init<>())
      .def_readwrite("Z", &dl::CodeMatrices::Z)
      .def_readwrite("V", &dl::CodeMatrices::V);

  py::enum_<dl::NormalizationMode>(m, "NormalizationMode")
      .value("STACKED", dl::NormalizationMode::kStacked)
      .value("SEPARATE", dl::NormalizationMode::kSeparate);

  py::class_<dl::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("s_z", &dl::TrainConfig::s_z)
      .def_readwrite("s_v", &dl::TrainConfig::s_v)
      .def_readwrite("max_iters", &dl::TrainConfig::max_iters)
      .def_readwrite("objective_tol", &dl::TrainConfig::objective_tol)
      .def_readwrite("dead_atom_replacement", &dl::TrainConfig::dead_atom_replacement)
      .def_readwrite("atom_cleanup", &dl::TrainConfig::atom_cleanup)
      .def_readwrite("normalization", &dl::TrainConfig::normalization)
      .def_readwrite("seed", &dl::TrainConfig::seed)
      .def_readwrite("threads", &dl::TrainConfig::threads)
      .def_readwrite("ridge", &dl::TrainConfig::ridge)
      .def_readwrite("quiet", &dl::TrainConfig::quiet);

  py::class_<dl::TrainResult>(m, "TrainResult")
      .def_readonly("dict", &dl::TrainResult::dict)
      .def_readonly("codes", &dl::TrainResult::codes)
      .def_readonly("trace", &dl::TrainResult::trace);

  py::class_<momp::SparsityBudget>(m, "SparsityBudget")
      .def(py::init([](int s_z, int s_v) { return momp::SparsityBudget{s_z, s_v}; }),
           py::arg("s_z"), py::arg("s_v"))
      .def_readwrite("s_z", &momp::SparsityBudget::s_z)
      .def_readwrite("s_v", &momp::SparsityBudget::s_v);

  py::class_<sep::BPConfig>(m, "BPConfig")
      .def(py::init<>())
      .def_readwrite("rho", &sep::BPConfig::rho)
      .def_readwrite("feas_tol", &sep::BPConfig::feas_tol)
      .def_readwrite("dual_tol", &sep::BPConfig::dual_tol)
      .def_readwrite("max_iters", &sep::BPConfig::max_iters);

  py::class_<sep::SeparationSolution>(m, "SeparationSolution")
      .def_readonly("z1c", &sep::SeparationSolution::z1c)
      .def_readonly("z2c", &sep::SeparationSolution::z2c)
      .def_readonly("v", &sep::SeparationSolution::v)
      .def_readonly("objective", &sep::SeparationSolution::objective)
      .def_readonly("constraint_residual", &sep::SeparationSolution::constraint_residual)
      .def_readonly("converged", &sep::SeparationSolution::converged)
      .def_readonly("projected", &sep::SeparationSolution::projected);

  // --- training --------------------------------------------------------------
  m.def("dct_init", &dl::dct_init, py::arg("n"), py::arg("gamma"), py::arg("d"),
        py::arg("mode") = dl::NormalizationMode::kStacked);
  m.def("random_init", &dl::random_init, py::arg("n"), py::arg("gamma"), py::arg("d"),
        py::arg("seed"), py::arg("mode") = dl::NormalizationMode::kStacked);

  m.def(
      "train_coupled",
      [](const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, const dl::TrainConfig& cfg,
         const dl::DictionaryTriple& init) {
        dl::TrainingSet data{Y, X};
        return dl::train_coupled(data, cfg, init);
      },
      py::arg("Y"), py::arg("X"), py::arg("cfg"), py::arg("init"));

  m.def(
      "train_weighted",
      [](const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& mask,
         const dl::TrainConfig& cfg, const dl::DictionaryTriple& init) {
        dl::MaskedTrainingSet data{{Y, X}, mask};
        return dl::train_weighted(data, cfg, init);
      },
      py::arg("Y"), py::arg("X"), py::arg("mask"), py::arg("cfg"), py::arg("init"));

  m.def(
      "momp",
      [](const Eigen::VectorXd& y, const Eigen::VectorXd& x, const dl::DictionaryTriple& dict,
         const momp::SparsityBudget& budget) {
        Eigen::VectorXd b(y.size() + x.size());
        b << y, x;
        momp::SparseCode code = momp::run(b, dict.stacked(), budget);
        return py::make_tuple(code.z, code.v);
      },
      py::arg("y"), py::arg("x"), py::arg("dict"), py::arg("budget"));

  // --- separation ------------------------------------------------------------
  m.def(
      "solve_separation",
      [](const Eigen::VectorXd& mvec, const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
         const dl::DictionaryTriple& dict, const sep::BPConfig& cfg) {
        return sep::solve_separation({mvec, y1, y2, &dict}, cfg);
      },
      py::arg("m"), py::arg("y1"), py::arg("y2"), py::arg("dict"),
      py::arg("cfg") = sep::BPConfig{});
  m.def("reconstruct_patches", &sep::reconstruct_patches, py::arg("solution"), py::arg("dict"),
        py::arg("include_v"));

  m.def(
      "separate_single_scale",
      [](const ImagePlane& mix, const ImagePlane& y1, const ImagePlane& y2,
         const dl::DictionaryTriple& dict, int patch, int step, const sep::BPConfig& cfg,
         bool include_v, int threads) {
        return patchwork::separate_single_scale(mix, y1, y2, dict, {patch, step}, cfg, include_v,
                                                threads);
      },
      py::arg("m"), py::arg("y1"), py::arg("y2"), py::arg("dict"), py::arg("patch") = 8,
      py::arg("step") = 4, py::arg("cfg") = sep::BPConfig{}, py::arg("include_v") = false,
      py::arg("threads") = 0);

  m.def(
      "separate_multiscale",
      [](const ImagePlane& mix, const ImagePlane& y1, const ImagePlane& y2, int patch,
         const std::vector<int>& eps, const std::vector<dl::DictionaryTriple>& dicts,
         const sep::BPConfig& cfg, bool include_v, int threads) {
        pyramid::PyramidSpec spec;
        for (int e : eps) spec.scales.push_back({patch, e});
        return pyramid::separate_multiscale(mix, y1, y2, spec, dicts, cfg, include_v, threads);
      },
      py::arg("m"), py::arg("y1"), py::arg("y2"), py::arg("patch"), py::arg("eps"),
      py::arg("dicts"), py::arg("cfg") = sep::BPConfig{}, py::arg("include_v") = false,
      py::arg("threads") = 0);

  // --- patches and pyramid -----------------------------------------------------
  m.def(
      "extract_patches",
      [](const ImagePlane& img, int patch, int step) {
        patchwork::PatchGrid grid = patchwork::extract_grid(img, {patch, step});
        return py::make_tuple(grid.dc, grid.residuals);
      },
      py::arg("img"), py::arg("patch") = 8, py::arg("step") = 4,
      "Returns (dc_grid, dc_removed_patch_columns).");
  m.def(
      "overlap_add",
      [](const Eigen::MatrixXd& patches, int patch, int step, Eigen::Index h, Eigen::Index w) {
        return patchwork::overlap_add(patches, {patch, step}, h, w);
      },
      py::arg("patches"), py::arg("patch"), py::arg("step"), py::arg("height"), py::arg("width"));
  m.def("dc_split", &patchwork::dc_split, py::arg("m_dc"), py::arg("y1_dc"), py::arg("y2_dc"));

  m.def(
      "pyramid_decompose",
      [](const ImagePlane& img, int patch, const std::vector<int>& eps) {
        pyramid::PyramidSpec spec;
        for (int e : eps) spec.scales.push_back({patch, e});
        pyramid::Pyramid p = pyramid::decompose(img, spec);
        return py::make_tuple(p.low, p.high);
      },
      py::arg("img"), py::arg("patch"), py::arg("eps"));
  m.def(
      "pyramid_reconstruct",
      [](const std::vector<ImagePlane>& low, const std::vector<ImagePlane>& high, int patch,
         const std::vector<int>& eps) {
        pyramid::PyramidSpec spec;
        for (int e : eps) spec.scales.push_back({patch, e});
        return pyramid::reconstruct({low, high}, spec);
      },
      py::arg("low"), py::arg("high"), py::arg("patch"), py::arg("eps"));

  // --- metrics, storage, benchmarks --------------------------------------------
  m.def("psnr", &metrics::psnr, py::arg("ref"), py::arg("test"), py::arg("peak") = 255.0);
  m.def("ssim", &metrics::ssim, py::arg("ref"), py::arg("test"));

  m.def("read_image", &storage::read_image, py::arg("path"));
  m.def("write_image", &storage::write_image, py::arg("img"), py::arg("path"));
  m.def("read_matrix", &storage::read_matrix, py::arg("path"));
  m.def("write_matrix", &storage::write_matrix, py::arg("m"), py::arg("path"));
  m.def("read_mask", &storage::read_mask, py::arg("path"));

  m.def(
      "save_dictionary",
      [](const std::string& prefix, const dl::DictionaryTriple& dict, int s_z, int s_v, int scale,
         bool weighted) {
        dl::save_dictionary(prefix, dict, {s_z, s_v, scale, weighted});
      },
      py::arg("prefix"), py::arg("dict"), py::arg("s_z"), py::arg("s_v"), py::arg("scale") = 1,
      py::arg("weighted") = false);
  m.def(
      "load_dictionary",
      [](const std::string& prefix) {
        auto [dict, manifest] = dl::load_dictionary(prefix);
        py::dict meta;
        meta["s_z"] = manifest.s_z;
        meta["s_v"] = manifest.s_v;
        meta["scale"] = manifest.scale;
        meta["weighted"] = manifest.weighted;
        return py::make_tuple(dict, meta);
      },
      py::arg("prefix"));

  m.def("atom_recovery_rate", &bench::atom_recovery_rate, py::arg("truth"), py::arg("learned"),
        py::arg("injective") = false);
  m.def("nmse", &bench::nmse, py::arg("x"), py::arg("x_hat"));
}
