#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "passivessh/datastore.hpp"
#include "passivessh/fingerprint.hpp"
#include "passivessh/scanner.hpp"

namespace py = pybind11;

namespace {

pssh::ScanPolicy make_policy(double timeout_s, int retries, const std::string& socks) {
  pssh::ScanPolicy policy;
  auto ms = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000));
  policy.connect_timeout = ms;
  policy.read_timeout = ms;
  policy.retries = retries;
  if (!socks.empty()) {
    pssh::SocksProxy proxy;
    if (auto colon = socks.rfind(':'); colon != std::string::npos && socks.find(':') == colon) {
      proxy.host = socks.substr(0, colon);
      proxy.port = static_cast<std::uint16_t>(std::stoi(socks.substr(colon + 1)));
    } else {
      proxy.host = socks;
    }
    policy.socks_proxy = proxy;
  }
  return policy;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "SSH fingerprint collection and historical lookup core";

  py::register_exception<pssh::Error>(m, "PsshError");

  m.def("client_identification", [] { return std::string(pssh::kClientIdentification); });

  m.def(
      "parse_identification",
      [](const std::string& line) {
        auto id = pssh::parse_identification_line(line);
        py::dict d;
        d["raw"] = id.raw;
        d["protoversion"] = id.protoversion;
        d["softwareversion"] = id.softwareversion;
        d["comments"] = id.comments ? py::cast(*id.comments) : py::none();
        return d;
      },
      py::arg("line"));

  m.def(
      "hassh_server",
      [](std::vector<std::string> kex, std::vector<std::string> encryption_s2c,
         std::vector<std::string> mac_s2c, std::vector<std::string> compression_s2c) {
        pssh::KexInitSummary k;
        k.kex_algorithms = std::move(kex);
        k.encryption_s2c = std::move(encryption_s2c);
        k.mac_s2c = std::move(mac_s2c);
        k.compression_s2c = std::move(compression_s2c);
        return pssh::hassh_server(k);
      },
      py::arg("kex"), py::arg("encryption_s2c"), py::arg("mac_s2c"), py::arg("compression_s2c"));

  m.def(
      "fingerprint_blob",
      [](py::bytes blob) {
        std::string raw = blob;
        auto fp = pssh::fingerprint_key(pssh::parse_hostkey_blob(pssh::to_bytes(raw)));
        py::dict d;
        d["algorithm"] = fp.algorithm;
        d["md5"] = fp.md5_colon;
        d["sha256"] = fp.sha256_b64;
        d["base64"] = fp.base64_blob;
        return d;
      },
      py::arg("blob"));

  m.def(
      "scan_json",
      [](const std::string& host, int port, double timeout, int retries, const std::string& socks) {
        auto endpoint = pssh::make_endpoint(host, port);
        auto policy = make_policy(timeout, retries, socks);
        py::gil_scoped_release release;
        return pssh::record_to_json(pssh::scan_endpoint(endpoint, policy));
      },
      py::arg("host"), py::arg("port") = 22, py::arg("timeout") = 10.0, py::arg("retries") = 1,
      py::arg("socks") = std::string());

  py::class_<pssh::Datastore>(m, "Datastore")
      .def(py::init([](const std::string& path) {
             return std::make_unique<pssh::Datastore>(path.empty() ? pssh::open_memory_backend()
                                                                   : pssh::open_sqlite_backend(path));
           }),
           py::arg("path") = std::string())
      .def("ingest_json",
           [](pssh::Datastore& s, const std::string& line) {
             auto out = s.ingest(pssh::record_from_json(line));
             return py::make_tuple(out.new_host, out.new_keys, out.new_banner);
           })
      .def(
          "host_json",
          [](const pssh::Datastore& s, const std::string& host, py::object port) {
            std::optional<std::uint16_t> p;
            if (!port.is_none()) p = static_cast<std::uint16_t>(port.cast<int>());
            return pssh::to_json_string(s.host_lookup(host, p));
          },
          py::arg("host"), py::arg("port") = py::none())
      .def("key_json",
           [](const pssh::Datastore& s, const std::string& md5) {
             return pssh::to_json_string(s.key_lookup(md5));
           })
      .def("hassh_json",
           [](const pssh::Datastore& s, const std::string& hassh) {
             return pssh::to_json_string(s.hassh_lookup(hassh));
           })
      .def("banner_json",
           [](const pssh::Datastore& s, const std::string& banner) {
             return pssh::to_json_string(s.banner_lookup(banner));
           })
      .def("banners", [](const pssh::Datastore& s) { return s.list_banners(); })
      .def("stats_json", [](const pssh::Datastore& s) { return pssh::to_json_string(s.stats()); })
      .def("onions_json",
           [](const pssh::Datastore& s) { return pssh::to_json_string(s.correlate_onions()); })
      .def("export_jsonl",
           [](const pssh::Datastore& s, const std::string& path) {
             std::ofstream out(path);
             if (!out) throw pssh::Error(pssh::ErrorKind::io_error, "cannot open " + path);
             return s.export_jsonl(out);
           })
      .def("import_jsonl", [](pssh::Datastore& s, const std::string& path) {
        std::ifstream in(path);
        if (!in) throw pssh::Error(pssh::ErrorKind::io_error, "cannot open " + path);
        auto result = s.import_jsonl(in);
        return py::make_tuple(result.imported, result.skipped, result.warnings);
      });
}
