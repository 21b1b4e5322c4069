#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fieldguard/harness.hpp"

namespace py = pybind11;
using namespace fieldguard;

namespace {

Telegram telegram_from_parts(int dst, int src, int type, int seq, py::bytes payload) {
  Telegram t;
  t.dst = static_cast<std::uint8_t>(dst);
  t.src = static_cast<std::uint8_t>(src);
  t.type = static_cast<std::uint8_t>(type);
  t.seq = static_cast<std::uint8_t>(seq);
  const std::string raw = payload;
  t.payload.assign(raw.begin(), raw.end());
  return t;
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string raw = b;
  return {raw.begin(), raw.end()};
}

ScenarioMode mode_from_name(const std::string& name) {
  if (name == "s1") return ScenarioMode::S1;
  if (name == "s2") return ScenarioMode::S2;
  if (name == "honest") return ScenarioMode::Honest;
  if (name == "custom" || name.empty()) return ScenarioMode::Custom;
  throw py::value_error("unknown scenario '" + name + "'");
}

std::string run_report_json(ScenarioConfig cfg, const std::string& scenario,
                            std::optional<std::uint64_t> seed) {
  if (!scenario.empty()) cfg.mode = mode_from_name(scenario);
  if (seed) cfg.seed = *seed;
  return emit_report(run_scenario(cfg), ReportFormat::Json);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "fieldguard: deterministic protection-agent simulator for legacy "
            "SCADA field networks";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const SimError& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  py::class_<Telegram>(m, "Telegram")
      .def(py::init(&telegram_from_parts), py::arg("dst"), py::arg("src"),
           py::arg("type"), py::arg("seq") = 0, py::arg("payload") = py::bytes())
      .def_readwrite("dst", &Telegram::dst)
      .def_readwrite("src", &Telegram::src)
      .def_readwrite("type", &Telegram::type)
      .def_readwrite("seq", &Telegram::seq)
      .def_property(
          "payload", [](const Telegram& t) { return to_bytes(t.payload); },
          [](Telegram& t, py::bytes b) { t.payload = from_bytes(b); })
      .def("family", [](const Telegram& t) { return family_of(t); })
      .def("point", [](const Telegram& t) { return point_of(t); })
      .def("value", [](const Telegram& t) { return value_of(t); })
      .def("command_equal", &Telegram::command_equal)
      .def("__eq__", [](const Telegram& a, const Telegram& b) { return a == b; })
      .def("__repr__", [](const Telegram& t) { return "<Telegram " + describe(t) + ">"; });

  m.def("control", &make_control, py::arg("dst"), py::arg("point"), py::arg("value"));
  m.def("set_point", &make_set_point, py::arg("type"), py::arg("dst"), py::arg("point"),
        py::arg("value"));
  m.def("replace", &make_replace, py::arg("dst"), py::arg("family"), py::arg("point"),
        py::arg("value"));
  m.def("interrogation", &make_interrogation, py::arg("dst"), py::arg("family"),
        py::arg("point"));
  m.def("flag_switch", &make_flag_switch, py::arg("type"), py::arg("dst"), py::arg("point"),
        py::arg("value"));
  m.def("empty_command", &make_empty, py::arg("type"), py::arg("dst"));

  m.def(
      "encode_telegram",
      [](const Telegram& t) {
        auto frame = encode_telegram(t);
        if (!frame.ok()) throw py::value_error(to_string(frame.error()));
        return to_bytes(frame.value());
      },
      "Encode a telegram to its wire frame; raises ValueError on invalid input.");

  m.def(
      "decode_telegram",
      [](py::bytes frame) {
        auto t = decode_telegram(from_bytes(frame));
        if (!t.ok()) throw py::value_error(to_string(t.error()));
        return std::move(t).value();
      },
      "Decode a wire frame; raises ValueError naming the codec error.");

  m.def(
      "checksum",
      [](py::bytes data) {
        auto raw = from_bytes(data);
        return xor_checksum(raw);
      },
      "XOR checksum over a byte string.");

  m.def(
      "payload_schema",
      [](int type) {
        const Schema* s = payload_schema(type);
        if (!s) throw py::value_error("InvalidType");
        py::dict out;
        out["type"] = s->type;
        out["name"] = s->name;
        py::list layouts;
        for (const auto& layout : s->layouts) {
          py::list fields;
          for (const auto& f : layout.fields) {
            py::dict fd;
            fd["name"] = f.name;
            fd["width"] = f.width();
            fields.append(fd);
          }
          layouts.append(fields);
        }
        out["layouts"] = layouts;
        return out;
      },
      "Payload layout descriptor for a telegram type.");

  m.def(
      "derive_channel_key",
      [](std::uint64_t seed, std::uint32_t channel_id) {
        auto key = derive_channel_key(seed, channel_id);
        return py::bytes(reinterpret_cast<const char*>(key.bytes.data()), key.bytes.size());
      },
      py::arg("seed"), py::arg("channel_id"));

  m.def(
      "seal_message",
      [](py::bytes key, std::uint32_t channel_id, int direction, std::uint64_t seq,
         int kind, py::bytes body) {
        auto raw = from_bytes(key);
        if (raw.size() != 32) throw py::value_error("key must be 32 bytes");
        ChannelKey k;
        std::copy(raw.begin(), raw.end(), k.bytes.begin());
        if (kind < 1 || kind > 7) throw py::value_error("kind must be 1..7");
        return to_bytes(seal(k, channel_id, static_cast<Direction>(direction), seq,
                             static_cast<MessageKind>(kind), from_bytes(body)));
      },
      py::arg("key"), py::arg("channel_id"), py::arg("direction"), py::arg("seq"),
      py::arg("kind"), py::arg("body"));

  m.def(
      "open_message",
      [](py::bytes key, int direction, py::bytes wire, std::uint64_t last_accepted) {
        auto raw = from_bytes(key);
        if (raw.size() != 32) throw py::value_error("key must be 32 bytes");
        ChannelKey k;
        std::copy(raw.begin(), raw.end(), k.bytes.begin());
        ReplayState replay{last_accepted};
        auto opened = open(k, static_cast<Direction>(direction), from_bytes(wire), replay);
        if (!opened.ok()) throw py::value_error(to_string(opened.error()));
        const SealedView& v = opened.value();
        return py::make_tuple(static_cast<int>(v.kind), to_bytes(v.body), v.seq);
      },
      py::arg("key"), py::arg("direction"), py::arg("wire"), py::arg("last_accepted") = 0,
      "Returns (kind, body, seq); raises ValueError on auth failure or replay.");

  m.def(
      "validate_config",
      [](const std::string& text) {
        validate_config(parse_config(text));
      },
      "Parse and validate a scenario file; raises ValueError with the field path.");

  m.def(
      "run_scenario_text",
      [](const std::string& text, const std::string& scenario,
         std::optional<std::uint64_t> seed) {
        auto cfg = parse_config(text);
        validate_config(cfg);
        return run_report_json(std::move(cfg), scenario, seed);
      },
      py::arg("text"), py::arg("scenario") = "", py::arg("seed") = std::nullopt,
      "Run a scenario given as config text; returns the JSON report.");

  m.def(
      "run_scenario_file",
      [](const std::string& path, const std::string& scenario,
         std::optional<std::uint64_t> seed) {
        return run_report_json(load_config(path), scenario, seed);
      },
      py::arg("path"), py::arg("scenario") = "", py::arg("seed") = std::nullopt,
      "Run a scenario file; returns the JSON report.");

  m.def(
      "run_preset",
      [](const std::string& scenario, int cases, std::uint64_t seed, int devices) {
        ScenarioConfig cfg;
        cfg.mode = mode_from_name(scenario);
        if (cfg.mode == ScenarioMode::Custom)
          throw py::value_error("preset must be s1, s2 or honest");
        cfg.cases = cases;
        cfg.seed = seed;
        cfg.preset_devices = devices;
        return emit_report(run_scenario(cfg), ReportFormat::Json);
      },
      py::arg("scenario"), py::arg("cases") = 0, py::arg("seed") = 1,
      py::arg("devices") = 10,
      "Run one of the built-in presets; returns the JSON report.");

#ifdef FIELDGUARD_VERSION
  m.attr("__version__") = FIELDGUARD_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
