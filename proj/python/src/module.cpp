#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "lrdlab/chaos.hpp"
#include "lrdlab/covariance.hpp"
#include "lrdlab/errors.hpp"
#include "lrdlab/experiment.hpp"
#include "lrdlab/harness.hpp"
#include "lrdlab/hermite.hpp"
#include "lrdlab/hermite_process.hpp"
#include "lrdlab/scaling.hpp"
#include "lrdlab/stats.hpp"

namespace py = pybind11;
using namespace lrdlab;

namespace {

py::array_t<double> to_array(std::vector<double> v) {
    auto* heap = new std::vector<double>(std::move(v));
    py::capsule owner(heap, [](void* p) { delete static_cast<std::vector<double>*>(p); });
    return py::array_t<double>({static_cast<py::ssize_t>(heap->size())}, heap->data(), owner);
}

py::array_t<double> to_array(std::vector<double> v, std::vector<py::ssize_t> shape) {
    auto arr = to_array(std::move(v));
    return arr.reshape(shape);
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

}  // namespace

PYBIND11_MODULE(_lrdlab, m) {
    m.doc() = "Long-memory Gaussian partial sums, Hermite processes and chaos contractions";

    // Covariance models and sampling.
    py::class_<CovarianceModel>(m, "CovarianceModel")
        .def_static("power_law", &CovarianceModel::power_law, py::arg("d"))
        .def_static("geometric", &CovarianceModel::geometric, py::arg("rho"))
        .def_static("tabulated", &CovarianceModel::tabulated, py::arg("values"))
        .def_static("fractional_gaussian_noise", &CovarianceModel::fractional_gaussian_noise, py::arg("hurst"),
                    py::arg("max_lag"))
        .def("__call__", &CovarianceModel::operator(), py::arg("lag"))
        .def_property_readonly("memory_parameter", &CovarianceModel::memory_parameter)
        .def("__repr__", &CovarianceModel::describe);

    m.def("autocovariance", &autocovariance, py::arg("model"), py::arg("lag"));
    m.def("lag_weighted_sum", &lag_weighted_sum, py::arg("model"), py::arg("N"), py::arg("power") = 1);

    py::class_<CirculantSampler>(m, "CirculantSampler")
        .def(py::init<CovarianceModel, std::size_t>(), py::arg("model"), py::arg("N"))
        .def(
            "sample", [](const CirculantSampler& s, std::uint64_t seed) { return to_array(s.sample(seed).values); },
            py::arg("seed"))
        .def_property_readonly("length", &CirculantSampler::length)
        .def_property_readonly("embedding_size", &CirculantSampler::embedding_size)
        .def_property_readonly("clipped_count", &CirculantSampler::clipped_count);

    // Hermite algebra.
    m.def("hermite_poly", &hermite_poly, py::arg("m"), py::arg("x"));
    py::class_<HermiteExpansion>(m, "HermiteExpansion")
        .def_static("from_coefficients", &HermiteExpansion::from_coefficients, py::arg("g"),
                    py::arg("centered") = true)
        .def_static("hermite", &HermiteExpansion::hermite, py::arg("m"), py::arg("scale") = 1.0)
        .def_static(
            "from_monomials",
            [](std::vector<double> c, bool centered) { return HermiteExpansion::from_monomials(c, centered); },
            py::arg("c"), py::arg("centered") = true)
        .def_property_readonly("coefficients",
                               [](const HermiteExpansion& e) {
                                   auto c = e.coefficients();
                                   return std::vector<double>(c.begin(), c.end());
                               })
        .def_property_readonly("mean", &HermiteExpansion::mean)
        .def_property_readonly("l2_norm_sq", &HermiteExpansion::l2_norm_sq)
        .def("rank", &HermiteExpansion::rank)
        .def("__call__", &HermiteExpansion::operator(), py::arg("x"));
    m.def("expand", &expand, py::arg("G"), py::arg("M"), py::arg("centered") = true);
    m.def("hermite_rank", &hermite_rank, py::arg("expansion"));
    py::class_<TightnessReport>(m, "TightnessReport")
        .def_readonly("convergent", &TightnessReport::convergent)
        .def_readonly("partial_sums", &TightnessReport::partial_sums)
        .def_readonly("tail_ratio", &TightnessReport::tail_ratio);
    m.def("tightness_condition", &tightness_condition, py::arg("expansion"));

    // Scaling laws.
    py::enum_<Regime>(m, "Regime")
        .value("SRD", Regime::SRD)
        .value("BOUNDARY", Regime::Boundary)
        .value("LRD", Regime::LRD);
    m.def("classify", py::overload_cast<double, int>(&classify), py::arg("d"), py::arg("k"));
    m.def("memory_of_functional", &memory_of_functional, py::arg("d"), py::arg("k"));
    m.def("hermite_hurst", &hermite_hurst, py::arg("d"), py::arg("k"));
    m.def("b_const", &b_const, py::arg("k"), py::arg("d"));
    m.def(
        "lag_power_sum",
        [](const CovarianceModel& model, int power) {
            const auto s = lag_power_sum(model, power);
            return py::make_tuple(s.value, s.tail_bound);
        },
        py::arg("model"), py::arg("m"));
    m.def(
        "sigma_sq", [](const HermiteExpansion& e, const CovarianceModel& model) { return sigma_sq(e, model).value; },
        py::arg("expansion"), py::arg("model"));
    m.def("exact_variance", &exact_variance, py::arg("expansion"), py::arg("model"), py::arg("N"));
    m.def("cov_limit_lemma", &cov_limit_lemma, py::arg("model"), py::arg("m"), py::arg("t1"), py::arg("t2"),
          py::arg("N"));

    py::class_<ComponentSpec>(m, "ComponentSpec")
        .def(py::init<HermiteExpansion, std::string, std::function<double(double)>>(), py::arg("expansion"),
             py::arg("label"), py::arg("direct") = std::function<double(double)>{})
        .def_readonly("label", &ComponentSpec::label)
        .def_readonly("expansion", &ComponentSpec::expansion)
        .def("rank", &ComponentSpec::rank);

    py::class_<LimitModel>(m, "LimitModel")
        .def(py::init<std::vector<ComponentSpec>, CovarianceModel>(), py::arg("specs"), py::arg("model"))
        .def("regimes",
             [](const LimitModel& l) {
                 std::vector<Regime> out;
                 for (const auto& c : l.components()) out.push_back(c.regime);
                 return out;
             })
        .def("normalizations", &LimitModel::normalizations, py::arg("N"))
        .def("srd_covariance_matrix", &LimitModel::srd_covariance_matrix, py::arg("t1"), py::arg("t2"))
        .def("srd_min_eigenvalue", &LimitModel::srd_min_eigenvalue, py::arg("t_grid"));

    m.def(
        "run_batch",
        [](const LimitModel& limit, std::size_t N, std::vector<double> t_grid, std::size_t R, std::uint64_t seed,
           unsigned threads) {
            auto b = run_batch(limit, N, t_grid, R, seed, threads);
            const auto J = static_cast<py::ssize_t>(b.components());
            const auto T = static_cast<py::ssize_t>(b.times());
            return to_array(std::move(b.values), {static_cast<py::ssize_t>(R), J, T});
        },
        py::arg("limit"), py::arg("N"), py::arg("t_grid"), py::arg("R"), py::arg("seed"), py::arg("threads") = 1,
        "Replications as an array of shape (R, components, times).");

    // Hermite processes.
    py::enum_<Representation>(m, "Representation")
        .value("TimeDomain", Representation::TimeDomain)
        .value("FiniteInterval", Representation::FiniteInterval)
        .value("PositiveHalfAxis", Representation::PositiveHalfAxis)
        .value("PartialSumLimit", Representation::PartialSumLimit)
        .value("ExactFgn", Representation::ExactFgn);
    py::class_<HermiteProcessSpec>(m, "HermiteProcessSpec")
        .def(py::init([](int k, double h0, Representation rep, std::size_t resolution) {
                 HermiteProcessSpec s;
                 s.k = k;
                 s.h0 = h0;
                 s.representation = rep;
                 s.resolution = resolution;
                 return s;
             }),
             py::arg("k") = 1, py::arg("h0") = 0.9, py::arg("representation") = Representation::FiniteInterval,
             py::arg("resolution") = 128)
        .def_readwrite("k", &HermiteProcessSpec::k)
        .def_readwrite("h0", &HermiteProcessSpec::h0)
        .def_readwrite("representation", &HermiteProcessSpec::representation)
        .def_readwrite("resolution", &HermiteProcessSpec::resolution)
        .def_readwrite("partial_sum_length", &HermiteProcessSpec::partial_sum_length)
        .def_property_readonly("hurst", &HermiteProcessSpec::hurst);
    m.def(
        "simulate",
        [](const HermiteProcessSpec& spec, std::vector<double> t_grid, std::size_t R, std::uint64_t seed,
           unsigned threads) {
            const HermiteProcessSimulator sim(spec, t_grid);
            const auto T = static_cast<py::ssize_t>(t_grid.size());
            return to_array(sim.sample_many(R, seed, threads), {static_cast<py::ssize_t>(R), T});
        },
        py::arg("spec"), py::arg("t_grid"), py::arg("R") = 1, py::arg("seed") = 0, py::arg("threads") = 1,
        "Paths as an array of shape (R, times).");
    m.def(
        "joint_simulate",
        [](std::vector<int> orders, double d, std::vector<double> t_grid, std::uint64_t seed) {
            const auto J = static_cast<py::ssize_t>(orders.size());
            const auto T = static_cast<py::ssize_t>(t_grid.size());
            return to_array(joint_simulate(orders, d, t_grid, seed), {J, T});
        },
        py::arg("orders"), py::arg("d"), py::arg("t_grid"), py::arg("seed"));
    m.def("contraction_positivity", py::overload_cast<int, int, double, std::size_t>(&contraction_positivity),
          py::arg("p"), py::arg("q"), py::arg("d"), py::arg("cells") = 48);
    m.def(
        "representation_equivalence",
        [](int k, Representation a, Representation b, double h0, std::vector<double> t_grid, std::size_t R,
           std::uint64_t seed, std::size_t resolution) {
            const auto e = representation_equivalence(k, a, b, h0, t_grid, R, seed, resolution);
            py::dict d;
            d["cov_a"] = e.cov_a;
            d["cov_b"] = e.cov_b;
            d["max_abs_discrepancy"] = e.max_abs_discrepancy;
            d["se_at_max"] = e.se_at_max;
            d["max_z"] = e.max_z;
            d["variance_a"] = e.variance_a;
            d["variance_b"] = e.variance_b;
            d["variance_se_a"] = e.variance_se_a;
            d["variance_se_b"] = e.variance_se_b;
            return d;
        },
        py::arg("k"), py::arg("a"), py::arg("b"), py::arg("h0"), py::arg("t_grid"), py::arg("R"), py::arg("seed"),
        py::arg("resolution") = 128);

    // Chaos kernels.
    py::class_<ChaosKernel>(m, "ChaosKernel")
        .def(py::init([](int order, std::vector<double> weights,
                         const py::array_t<double, py::array::c_style | py::array::forcecast>& values, bool sym) {
                 return ChaosKernel(order, std::move(weights), from_array(values), sym);
             }),
             py::arg("order"), py::arg("weights"), py::arg("values"), py::arg("symmetric") = false)
        .def_property_readonly("order", &ChaosKernel::order)
        .def_property_readonly("grid_size", &ChaosKernel::grid_size)
        .def_property_readonly("values",
                               [](const ChaosKernel& k) {
                                   auto v = k.values();
                                   return to_array(std::vector<double>(v.begin(), v.end()));
                               })
        .def("norm", &ChaosKernel::norm);
    m.def("contract", &contract, py::arg("f"), py::arg("g"), py::arg("r"));
    m.def("symmetrize", &symmetrize, py::arg("f"));
    m.def("product_formula_check", &product_formula_check, py::arg("f"), py::arg("g"));
    m.def(
        "wick_moment",
        [](std::vector<int> factors, const Eigen::MatrixXd& cov) { return wick_moment(factors, cov); },
        py::arg("factors"), py::arg("cov"));
    m.def("partial_sum_kernel", &partial_sum_kernel, py::arg("m"), py::arg("N"), py::arg("t"), py::arg("model"),
          py::arg("normalization") = 0.0);
    m.def("partial_sum_contraction_norm", &partial_sum_contraction_norm, py::arg("p"), py::arg("q"), py::arg("r"),
          py::arg("model"), py::arg("N"), py::arg("t") = 1.0);

    // Statistics.
    m.def(
        "ks_test_normal",
        [](std::vector<double> x) {
            const auto r = ks_test_normal(x);
            return py::make_tuple(r.statistic, r.p_value);
        },
        py::arg("x"));
    m.def("distance_correlation", &distance_correlation, py::arg("x"), py::arg("y"));

    m.def(
        "_run_command",
        [](const std::string& command, const std::string& config, std::optional<std::uint64_t> seed,
           std::optional<std::filesystem::path> out, unsigned threads, const std::string& format) {
            RunOptions options;
            options.seed = seed;
            options.out = out;
            options.threads = threads;
            options.format = format == "json" ? TableFormat::Json : TableFormat::Csv;
            const auto cfg = parse_config(nlohmann::json::parse(config));
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run_command(command, cfg, options);
            }
            return py::make_tuple(r.report.dump(), r.failures);
        },
        py::arg("command"), py::arg("config"), py::arg("seed"), py::arg("out"), py::arg("threads"),
        py::arg("format"));

    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
}
