#include "passivessh/api.hpp"

#include <chrono>
#include <httplib.h>
#include <json.hpp>
#include <thread>

#include "passivessh/bytes.hpp"
#include "passivessh/errors.hpp"

namespace pssh {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

std::size_t cursor_offset(const httplib::Request& req) {
  if (!req.has_param("cursor")) return 0;
  std::optional<std::size_t> offset;
  try {
    std::string plain = to_text(base64_decode(req.get_param_value("cursor")));
    if (plain.starts_with("off:")) offset = std::stoull(plain.substr(4));
  } catch (const std::exception&) {
  }
  if (!offset) throw Error(ErrorKind::malformed, "invalid cursor");
  return *offset;
}

// Replaces `arr` with one page and returns the cursor for the next one, if any.
std::optional<std::string> paginate(json& arr, std::size_t offset) {
  const std::size_t total = arr.size();
  json page = json::array();
  for (std::size_t i = offset; i < total && i < offset + kPageLimit; ++i) page.push_back(std::move(arr[i]));
  arr = std::move(page);
  if (offset + kPageLimit < total)
    return base64_encode(to_bytes("off:" + std::to_string(offset + kPageLimit)));
  return std::nullopt;
}

void attach_page(json& body, const char* field, json&& items, const httplib::Request& req) {
  std::size_t offset = cursor_offset(req);
  body["total"] = items.size();
  auto next = paginate(items, offset);
  body[field] = std::move(items);
  if (next) body["cursor"] = *next;
}

}  // namespace

struct ApiServer::Impl {
  ApiConfig config;
  Datastore& store;
  httplib::Server server;
  std::thread thread;
  std::uint16_t bound_port = 0;

  Impl(ApiConfig cfg, Datastore& s) : config(std::move(cfg)), store(s) { install_routes(); }

  bool authorized(const httplib::Request& req, httplib::Response& res, bool write_op) {
    bool gated = !config.tokens.empty() && (write_op || config.protect_reads);
    if (!gated) return true;
    auto header = req.get_header_value("Authorization");
    constexpr std::string_view scheme = "Bearer ";
    if (header.size() > scheme.size() && std::string_view(header).starts_with(scheme) &&
        config.tokens.contains(header.substr(scheme.size())))
      return true;
    res.set_header("WWW-Authenticate", "Bearer");
    send_error(res, 401, "unauthorized");
    return false;
  }

  template <typename Fn>
  void handle(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::not_found:
          send_error(res, 404, "not found");
          break;
        case ErrorKind::malformed:
          send_error(res, 400, e.what());
          break;
        default:
          send_error(res, 500, e.what());
      }
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  void install_routes() {
    auto& s = server;

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;  // handler already produced a JSON body
      send_json(res, res.status, json{{"error", httplib::status_message(res.status)}});
    });

    s.Get("/banners", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res, false)) return;
      handle(res, [&] {
        json body;
        attach_page(body, "banners", json(store.list_banners()), req);
        send_json(res, 200, body);
      });
    });

    s.Get(R"(/banner/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res, false)) return;
      handle(res, [&] {
        json body;
        attach_page(body, "hosts", json::parse(to_json_string(store.banner_lookup(req.matches[1]))), req);
        send_json(res, 200, body);
      });
    });

    s.Get(R"(/host/ssh/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res, false)) return;
      handle(res, [&] {
        std::optional<std::uint16_t> port;
        if (req.has_param("port")) {
          int v = 0;
          try {
            v = std::stoi(req.get_param_value("port"));
          } catch (const std::exception&) {
            v = 0;
          }
          if (v < 1 || v > 65535) throw Error(ErrorKind::malformed, "invalid port parameter");
          port = static_cast<std::uint16_t>(v);
        }
        auto histories = store.host_lookup(req.matches[1], port);
        send_json(res, 200, json::parse(to_json_string(histories)));
      });
    });

    s.Get("/fingerprint/all", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res, false)) return;
      handle(res, [&] {
        json items = json::array();
        for (const auto& e : store.list_keys())
          items.push_back({{"md5", e.md5_hex},
                           {"algorithm", e.algorithm},
                           {"sha256", e.sha256_b64},
                           {"host_count", e.hosts.size()}});
        json body;
        attach_page(body, "fingerprints", std::move(items), req);
        send_json(res, 200, body);
      });
    });

    s.Get(R"(/fingerprint/([0-9a-f]{32}))", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res, false)) return;
      handle(res, [&] {
        json body = json::parse(to_json_string(store.key_lookup(req.matches[1])));
        json hosts = std::move(body["hosts"]);
        attach_page(body, "hosts", std::move(hosts), req);
        send_json(res, 200, body);
      });
    });

    s.Get(R"(/hassh/hosts/([0-9a-f]{32}))", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res, false)) return;
      handle(res, [&] {
        json body;
        attach_page(body, "hosts", json::parse(to_json_string(store.hassh_lookup(req.matches[1]))), req);
        send_json(res, 200, body);
      });
    });

    s.Get("/stats", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res, false)) return;
      handle(res, [&] { send_json(res, 200, json::parse(to_json_string(store.stats()))); });
    });

    s.Get("/onions/correlation", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res, false)) return;
      handle(res, [&] {
        json body;
        attach_page(body, "pairs", json::parse(to_json_string(store.correlate_onions())), req);
        send_json(res, 200, body);
      });
    });

    s.Post("/records", [this](const httplib::Request& req, httplib::Response& res) {
      if (config.readonly) {
        send_error(res, 405, "read-only instance");
        return;
      }
      if (!authorized(req, res, true)) return;
      handle(res, [&] {
        json parsed;
        try {
          parsed = json::parse(req.body);
        } catch (const json::exception& e) {
          throw Error(ErrorKind::malformed, std::string("invalid JSON body: ") + e.what());
        }
        json items = parsed.is_array() ? std::move(parsed) : json::array({std::move(parsed)});
        std::vector<ScanRecord> records;
        for (std::size_t i = 0; i < items.size(); ++i) {
          try {
            records.push_back(record_from_json(items[i].dump()));
          } catch (const Error& e) {
            throw Error(ErrorKind::malformed, "record " + std::to_string(i) + ": " + e.what());
          }
        }
        json outcomes = json::array();
        for (const auto& r : records) {
          auto out = store.ingest(r);
          outcomes.push_back(
              {{"new_host", out.new_host}, {"new_keys", out.new_keys}, {"new_banner", out.new_banner}});
        }
        send_json(res, 200, json{{"ingested", records.size()}, {"outcomes", std::move(outcomes)}});
      });
    });
  }
};

ApiServer::ApiServer(ApiConfig config, Datastore& store)
    : impl_(std::make_unique<Impl>(std::move(config), store)) {}

ApiServer::~ApiServer() { stop(); }

void ApiServer::start() {
  auto& impl = *impl_;
  if (impl.config.bind_port == 0) {
    int port = impl.server.bind_to_any_port(impl.config.bind_host);
    if (port <= 0)
      throw Error(ErrorKind::io_error, "cannot bind " + impl.config.bind_host + " on an ephemeral port");
    impl.bound_port = static_cast<std::uint16_t>(port);
  } else {
    if (!impl.server.bind_to_port(impl.config.bind_host, impl.config.bind_port))
      throw Error(ErrorKind::io_error, "cannot bind " + impl.config.bind_host + ":" +
                                           std::to_string(impl.config.bind_port));
    impl.bound_port = impl.config.bind_port;
  }
  impl.thread = std::thread([&impl] { impl.server.listen_after_bind(); });
  for (int i = 0; i < 2000 && !impl.server.is_running(); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  if (!impl.server.is_running()) {
    if (impl.thread.joinable()) impl.thread.join();
    throw Error(ErrorKind::io_error, "server failed to start");
  }
}

std::uint16_t ApiServer::port() const { return impl_->bound_port; }

void ApiServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void ApiServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pssh
