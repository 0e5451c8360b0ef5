#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "phyre/bench.hpp"
#include "phyre/error.hpp"

namespace py = pybind11;
using namespace phyre;

namespace {

py::object from_json(const Json& j)
{
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<double> coords(const Action& a)
{
  return {a.coords.begin(), a.coords.begin() + a.dims()};
}

Action make_action(const std::vector<double>& v)
{
  if (v.size() == 3)
  {
    return Action::single(v[0], v[1], v[2]);
  }
  if (v.size() == 6)
  {
    return Action::pair(v[0], v[1], v[2], v[3], v[4], v[5]);
  }
  throw Error(ErrorCode::TierMismatch, "an action has 3 or 6 coordinates");
}

} // namespace

PYBIND11_MODULE(_core, m)
{
  m.attr("__version__") = PHYRE_VERSION;

  static PyObject* error_type = PyErr_NewException("phyre.Error", PyExc_RuntimeError, nullptr);
  m.add_object("Error", py::handle(error_type));
  py::register_exception_translator([](std::exception_ptr p) {
    try
    {
      if (p)
      {
        std::rethrow_exception(p);
      }
    }
    catch (const Error& e)
    {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  py::enum_<Tier>(m, "Tier").value("B", Tier::B).value("TwoB", Tier::TwoB);

  py::class_<Action>(m, "Action")
      .def(py::init(&make_action), py::arg("coords"))
      .def_readonly("tier", &Action::tier)
      .def_property_readonly("coords", &coords)
      .def("__eq__", [](const Action& a, const Action& b) { return a == b; })
      .def("__repr__", [](const Action& a) { return "Action(" + to_json(a).dump() + ")"; });

  py::class_<Task>(m, "Task")
      .def_readonly("id", &Task::id)
      .def_readonly("template_id", &Task::template_id)
      .def_readonly("tier", &Task::tier)
      .def_readonly("time_limit", &Task::time_limit)
      .def_readonly("solution", &Task::solution)
      .def("to_dict", [](const Task& t) { return from_json(to_json(t)); })
      .def("__repr__", [](const Task& t) { return "Task(" + t.id + ")"; });

  py::class_<AttemptResult>(m, "AttemptResult")
      .def_readonly("reward", &AttemptResult::reward)
      .def_readonly("end_time", &AttemptResult::end_time)
      .def_property_readonly("frames", [](const AttemptResult& r) {
        py::list out;
        for (const WorldState& w : r.frames)
        {
          out.append(from_json(to_json(w)));
        }
        return out;
      });

  m.def("default_task_dir", &default_task_dir);
  m.def("load_task", &load_task, py::arg("path"));
  m.def("load_tier_tasks", [](Tier tier, std::optional<std::filesystem::path> dir) {
    return load_tier_tasks(dir.value_or(default_task_dir()), tier);
  }, py::arg("tier"), py::arg("directory") = py::none());

  m.def("validate_action", [](const Task& t, const Action& a) { return std::string(to_string(validate_action(t, a))); },
        py::arg("task"), py::arg("action"));
  m.def("solves", &solves, py::arg("task"), py::arg("action"), py::call_guard<py::gil_scoped_release>());
  m.def("attempt", [](const Task& t, const Action& a, int stride) {
    AttemptOptions opt;
    opt.frame_stride = stride;
    opt.rasterize = false;
    py::gil_scoped_release release;
    return attempt(t, a, opt);
  }, py::arg("task"), py::arg("action"), py::arg("stride") = kDefaultFrameStride);

  m.def("rasterize_task", [](const Task& t, std::optional<Action> a) {
    const WorldState w = a ? world_with_action(t, *a) : t.world;
    const ObservationImage img = rasterize(w, t.goal);
    // Row 0 is the top of the scene, as in an image.
    py::array_t<std::uint8_t> out({kObservationSize, kObservationSize});
    auto view = out.mutable_unchecked<2>();
    for (int j = 0; j < kObservationSize; ++j)
    {
      for (int i = 0; i < kObservationSize; ++i)
      {
        view(kObservationSize - 1 - j, i) = img.at(i, j);
      }
    }
    return out;
  }, py::arg("task"), py::arg("action") = py::none());

  m.def("sample_actions", [](Tier tier, int n, std::uint64_t seed) { return sample_actions(tier, n, seed).actions; },
        py::arg("tier"), py::arg("n"), py::arg("seed") = 0);

  m.def("success_curve", [](const std::vector<std::optional<int>>& solved_at) {
    std::vector<AttemptLog> logs(solved_at.size());
    for (std::size_t i = 0; i < solved_at.size(); ++i)
    {
      logs[i].solved_at = solved_at[i];
    }
    const SuccessCurve s = success_curve(logs);
    return std::vector<double>(s.begin(), s.end());
  }, py::arg("solved_at"));
  m.def("auccess", [](const std::vector<double>& curve) {
    if (curve.size() != 100)
    {
      throw Error(ErrorCode::ShapeMismatch, "a success curve has 100 entries");
    }
    SuccessCurve s{};
    std::copy(curve.begin(), curve.end(), s.begin());
    return auccess(s);
  }, py::arg("curve"));
  m.def("weight_share", &weight_share, py::arg("k"));
  m.def("wilcoxon_one_sided", &wilcoxon_one_sided, py::arg("a"), py::arg("b"));

  m.def("run_benchmark_json", [](const std::string& config, std::optional<std::vector<Task>> tasks) {
    const BenchConfig c = BenchConfig::from_json(Json::parse(config));
    BenchResult r;
    {
      py::gil_scoped_release release;
      r = run_benchmark(c, tasks ? *tasks : load_tier_tasks(default_task_dir(), c.tier));
    }
    return to_json(r).dump();
  }, py::arg("config"), py::arg("tasks") = py::none());
}
