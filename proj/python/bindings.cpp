#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "funnelsim/experiments.hpp"

namespace py = pybind11;
using namespace funnelsim;

namespace {

FeedbackSign sign(int eta) { return feedback_sign_from_int(eta); }

py::dict sample_arrays(const Trajectory& traj, bool report_only) {
    std::vector<double> t, x, u, w, k;
    auto push = [&](const TrajectorySample& s) {
        t.push_back(s.t);
        x.push_back(s.x);
        u.push_back(s.u);
        w.push_back(s.w);
        k.push_back(s.k);
    };
    if (report_only) {
        for (auto i : traj.report_indices) push(traj.samples[i]);
    } else {
        for (const auto& s : traj.samples) push(s);
    }
    py::dict d;
    d["t"] = t;
    d["x"] = x;
    d["u"] = u;
    d["w"] = w;
    d["k"] = k;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Funnel feedback simulation and chi certificates";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<FunnelBoundaryError>(m, "FunnelBoundaryError", PyExc_ValueError);
    py::register_exception<InvalidBoxError>(m, "InvalidBoxError", PyExc_ValueError);
    py::register_exception<CertificationFailure>(m, "CertificationFailure", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("alpha", &alpha, py::arg("s"));
    m.def("g", &g, py::arg("v"));
    m.def("g_derivative", &g_derivative, py::arg("v"));

    py::class_<FunnelFunction>(m, "FunnelFunction")
        .def_static("identity", &FunnelFunction::identity)
        .def_static("exp_minus_one", &FunnelFunction::exp_minus_one, py::arg("rate"))
        .def_static("parse", &funnel_from_string)
        .def("__call__", &FunnelFunction::value)
        .def("derivative", &FunnelFunction::derivative)
        .def_property_readonly("c_phi", &FunnelFunction::c_phi)
        .def("__eq__", &FunnelFunction::operator==)
        .def("__repr__", &FunnelFunction::describe);

    m.def("h", &h, py::arg("phi"), py::arg("t"), py::arg("xi"));
    m.def("funnel_ratio", &funnel_ratio, py::arg("phi"), py::arg("t"), py::arg("xi"));
    m.def("growth_violation", &growth_violation, py::arg("phi"), py::arg("t_end"), py::arg("samples"),
          py::arg("delta") = 1e-7);

    py::class_<DriftFunction>(m, "DriftFunction")
        .def_static("zero", &DriftFunction::zero)
        .def_static("affine", &DriftFunction::affine, py::arg("a"), py::arg("b"))
        .def_static("quadratic", &DriftFunction::quadratic, py::arg("a"))
        .def_static("table",
                    [](std::vector<double> rho, std::vector<double> xi, std::vector<double> values) {
                        return DriftFunction::table({std::move(rho), std::move(xi), std::move(values)});
                    },
                    py::arg("rho"), py::arg("xi"), py::arg("values"))
        .def("__call__", &DriftFunction::operator(), py::arg("rho"), py::arg("xi"))
        .def("mirrored", &DriftFunction::mirrored)
        .def("__repr__", &DriftFunction::describe);

    py::class_<PerturbationSignal>(m, "PerturbationSignal")
        .def_static("constant", &PerturbationSignal::constant, py::arg("c"))
        .def_static("sinusoid", &PerturbationSignal::sinusoid, py::arg("amplitude"), py::arg("omega"),
                    py::arg("phase") = 0.0)
        .def_static("noise_spline", &PerturbationSignal::noise_spline, py::arg("seed"), py::arg("bound"),
                    py::arg("knot_spacing") = 1.0)
        .def("__call__", &PerturbationSignal::operator())
        .def_property_readonly("bound", &PerturbationSignal::bound)
        .def("__repr__", &PerturbationSignal::describe);

    py::class_<ScenarioSpec>(m, "ScenarioSpec")
        .def(py::init([](DriftFunction drift, PerturbationSignal p, FunnelFunction funnel, int eta, double x0,
                         double t_end, double tol_rel, double tol_abs, double guard_margin, std::string method,
                         int report_points) {
                 ScenarioSpec s;
                 s.drift = std::move(drift);
                 s.perturbation = std::move(p);
                 s.funnel = std::move(funnel);
                 s.eta = sign(eta);
                 s.x0 = x0;
                 s.t_end = t_end;
                 s.tolerances = {tol_rel, tol_abs};
                 s.guard_margin = guard_margin;
                 s.method = step_method_from_string(method);
                 s.report_points = report_points;
                 s.validate();
                 return s;
             }),
             py::arg("drift") = DriftFunction::zero(), py::arg("perturbation") = PerturbationSignal::constant(0.0),
             py::arg("funnel") = FunnelFunction::identity(), py::arg("eta") = 1, py::arg("x0") = 0.0,
             py::arg("t_end") = 50.0, py::arg("tol_rel") = 1e-6, py::arg("tol_abs") = 1e-9,
             py::arg("guard_margin") = 1e-3, py::arg("method") = "sdirk4", py::arg("report_points") = 2000)
        .def_readwrite("x0", &ScenarioSpec::x0)
        .def_readwrite("t_end", &ScenarioSpec::t_end)
        .def_property(
            "eta", [](const ScenarioSpec& s) { return eta_int(s.eta); },
            [](ScenarioSpec& s, int eta) { s.eta = sign(eta); })
        .def("rhs", [](const ScenarioSpec& s, double t, double x) { return closed_loop_rhs(s, t, x).dxdt; });

    py::class_<TrajectoryStats>(m, "TrajectoryStats")
        .def_readonly("max_w", &TrajectoryStats::max_w)
        .def_readonly("sup_abs_u", &TrajectoryStats::sup_abs_u)
        .def_readonly("final_abs_x", &TrajectoryStats::final_abs_x)
        .def_readonly("max_k", &TrajectoryStats::max_k)
        .def_readonly("accepted_steps", &TrajectoryStats::accepted_steps)
        .def_readonly("rejected_steps", &TrajectoryStats::rejected_steps)
        .def_readonly("guard_rejections", &TrajectoryStats::guard_rejections);

    py::class_<Trajectory>(m, "Trajectory")
        .def_property_readonly("status", [](const Trajectory& t) { return to_string(t.status); })
        .def_readonly("t_fail", &Trajectory::t_fail)
        .def_readonly("t_end", &Trajectory::t_end)
        .def_readonly("stats", &Trajectory::stats)
        .def("report", [](const Trajectory& t) { return sample_arrays(t, true); })
        .def("steps", [](const Trajectory& t) { return sample_arrays(t, false); })
        .def("to_csv", [](const Trajectory& t) {
            std::ostringstream os;
            write_trajectory_csv(os, t);
            return os.str();
        });

    m.def("integrate", &integrate, py::arg("scenario"), py::call_guard<py::gil_scoped_release>());

    py::class_<InvariantReport>(m, "InvariantReport")
        .def_readonly("funnel_contained", &InvariantReport::funnel_contained)
        .def_readonly("epsilon", &InvariantReport::epsilon)
        .def_readonly("converged", &InvariantReport::converged)
        .def_readonly("control_bounded", &InvariantReport::control_bounded)
        .def_readonly("sup_abs_u", &InvariantReport::sup_abs_u)
        .def_readonly("control_bound", &InvariantReport::control_bound)
        .def_readonly("global_", &InvariantReport::global)
        .def_readonly("max_w", &InvariantReport::max_w)
        .def_readonly("window_max_abs_x", &InvariantReport::window_max_abs_x);

    m.def("check_invariants", &check_invariants, py::arg("trajectory"),
          py::arg("conv_threshold") = kDefaultConvThreshold, py::arg("conv_window") = kDefaultConvWindow);

    py::class_<CompactBox>(m, "CompactBox")
        .def(py::init([](std::pair<double, double> P, std::pair<double, double> K) {
                 CompactBox b{{P.first, P.second}, {K.first, K.second}};
                 b.validate();
                 return b;
             }),
             py::arg("P") = std::pair{0.0, 0.0}, py::arg("K") = std::pair{-1.0, 1.0});

    py::class_<ChiGrid>(m, "ChiGrid")
        .def(py::init<int, int, int, int>(), py::arg("p_points") = 64, py::arg("k_points") = 64,
             py::arg("v_points_per_half") = 32, py::arg("refinement_depth") = 6)
        .def("doubled", &ChiGrid::doubled);

    py::class_<ChiEvaluation>(m, "ChiEvaluation")
        .def_readonly("s", &ChiEvaluation::s)
        .def_readonly("value", &ChiEvaluation::value)
        .def_readonly("coarse_value", &ChiEvaluation::coarse_value)
        .def_property_readonly("argmin", [](const ChiEvaluation& e) {
            return py::make_tuple(e.argmin.rho, e.argmin.xi, e.argmin.v);
        });

    m.def("chi_eval", &chi_eval, py::arg("box"), py::arg("drift"), py::arg("s"), py::arg("grid") = ChiGrid{});
    m.def(
        "nu_eval",
        [](const CompactBox& box, const DriftFunction& f, int eta, double s, const ChiGrid& grid) {
            return nu_eval(box, f, sign(eta), s, grid);
        },
        py::arg("box"), py::arg("drift"), py::arg("eta"), py::arg("s"), py::arg("grid") = ChiGrid{});
    m.def("s_sequence", &s_sequence, py::arg("n"));

    py::class_<CertificateEntry>(m, "CertificateEntry")
        .def_readonly("n", &CertificateEntry::n)
        .def_readonly("s", &CertificateEntry::s)
        .def_readonly("chi", &CertificateEntry::chi)
        .def_readonly("bound", &CertificateEntry::bound)
        .def_readonly("margin", &CertificateEntry::margin);

    py::class_<UnboundednessCertificate>(m, "UnboundednessCertificate")
        .def_property_readonly("eta", [](const UnboundednessCertificate& c) { return eta_int(c.eta); })
        .def_readonly("c1", &UnboundednessCertificate::c1)
        .def_readonly("entries", &UnboundednessCertificate::entries)
        .def("satisfied", &UnboundednessCertificate::satisfied)
        .def("min_margin", &UnboundednessCertificate::min_margin)
        .def("to_text", [](const UnboundednessCertificate& c) {
            std::ostringstream os;
            write_certificate(os, c);
            return os.str();
        });

    m.def(
        "build_certificate",
        [](const CompactBox& box, const DriftFunction& f, int eta, int n_max, const ChiGrid& grid, double tol) {
            return build_certificate(box, f, sign(eta), n_max, grid, tol);
        },
        py::arg("box"), py::arg("drift"), py::arg("eta"), py::arg("n_max"), py::arg("grid") = ChiGrid{},
        py::arg("tolerance") = 1e-6);
    m.def(
        "certify_unboundedness",
        [](const CompactBox& box, const DriftFunction& f, int eta, int n_max, const ChiGrid& grid, double tol) {
            return certify_unboundedness(box, f, sign(eta), n_max, grid, tol);
        },
        py::arg("box"), py::arg("drift"), py::arg("eta"), py::arg("n_max"), py::arg("grid") = ChiGrid{},
        py::arg("tolerance") = 1e-6);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_readwrite("name", &ExperimentConfig::name)
        .def_readwrite("output_dir", &ExperimentConfig::output_dir)
        .def_readwrite("workers", &ExperimentConfig::workers)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def("scenario_names",
             [](const ExperimentConfig& c) {
                 std::vector<std::string> names;
                 for (const auto& d : c.expanded_scenarios()) names.push_back(d.name);
                 return names;
             })
        .def("to_json", [](const ExperimentConfig& c) { return config_to_json(c).dump(2); });

    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("text"));

    m.def(
        "run_batch",
        [](const ExperimentConfig& cfg, bool simulate, bool chi, bool write_files) {
            BatchReport rep;
            {
                py::gil_scoped_release release;
                rep = run_batch(cfg, {simulate, chi, write_files});
            }
            py::dict d;
            d["runs"] = rep.run_count;
            d["contained"] = rep.contained;
            d["converged"] = rep.converged;
            d["control_bounded"] = rep.control_bounded;
            d["escaped"] = rep.escaped;
            d["all_checks_pass"] = rep.all_checks_pass();
            std::ostringstream os;
            write_text_summary(os, cfg, rep);
            d["summary"] = os.str();
            py::list certs;
            for (const auto& c : rep.certificates) certs.append(py::make_tuple(c.name, c.certificate));
            d["certificates"] = certs;
            return d;
        },
        py::arg("config"), py::arg("simulate") = true, py::arg("chi") = true, py::arg("write_files") = true);
}
