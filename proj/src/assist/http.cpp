#include "a2p/assist/http.hpp"

#include <httplib.h>

namespace a2p::assist {

using nlohmann::json;

struct HttpServer::Impl {
  AssistService& svc;
  httplib::Server server;
  explicit Impl(AssistService& s) : svc(s) {}
};

namespace {

void reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, std::string("malformed JSON: ") + e.what());
  }
}

std::uint64_t count_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 0)
    throw ServiceError(400, std::string("missing or negative integer '") + key + "'");
  return j[key].get<std::uint64_t>();
}

std::uint64_t revision_of(const json& j) { return count_field(j, "revision"); }

std::uint64_t parse_uint(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos == s.size() && s.find('-') == std::string::npos) return v;
  } catch (const std::exception&) {
  }
  throw ServiceError(400, std::string("invalid ") + what + " '" + s + "'");
}

// The wall is either under "wall" or inline next to "revision".
json wall_payload(const json& j) { return j.contains("wall") ? j["wall"] : j; }

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      reply(res, {{"error", e.what()}}, e.status());
    } catch (const json::exception& e) {
      reply(res, {{"error", e.what()}}, 400);
    } catch (const std::exception& e) {
      reply(res, {{"error", e.what()}}, 500);
    }
  };
}

}  // namespace

HttpServer::HttpServer(AssistService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->svc;
  const std::string sid = "/sessions/([^/]+)";

  srv.Post("/sessions", guarded([&](const auto& req, auto& res) { reply(res, svc.create_session(body_of(req)), 201); }));
  srv.Get(sid + "/state", guarded([&](const auto& req, auto& res) { reply(res, svc.state(req.matches[1])); }));
  srv.Get(sid + "/proposals", guarded([&](const auto& req, auto& res) {
            const std::size_t n = req.has_param("n") ? parse_uint(req.get_param_value("n"), "n") : 0;
            reply(res, svc.proposals(req.matches[1], n));
          }));
  srv.Post(sid + "/accept", guarded([&](const auto& req, auto& res) {
             const auto j = body_of(req);
             const std::size_t count = j.contains("count") ? count_field(j, "count") : 1;
             reply(res, svc.accept(req.matches[1], count, revision_of(j)));
           }));
  srv.Post(sid + "/reject", guarded([&](const auto& req, auto& res) {
             reply(res, svc.reject(req.matches[1], revision_of(body_of(req))));
           }));
  srv.Get(sid + "/alternatives", guarded([&](const auto& req, auto& res) { reply(res, svc.alternatives(req.matches[1])); }));
  srv.Post(sid + "/alternatives/pick", guarded([&](const auto& req, auto& res) {
             const auto j = body_of(req);
             reply(res, svc.pick_alternative(req.matches[1], count_field(j, "rank"), revision_of(j)));
           }));
  srv.Post(sid + "/walls", guarded([&](const auto& req, auto& res) {
             const auto j = body_of(req);
             reply(res, svc.add_wall(req.matches[1], wall_payload(j), revision_of(j)));
           }));
  srv.Put(sid + "/walls/([^/]+)", guarded([&](const auto& req, auto& res) {
            const auto j = body_of(req);
            reply(res, svc.modify_wall(req.matches[1], req.matches[2], wall_payload(j), revision_of(j)));
          }));
  srv.Delete(sid + "/walls/([^/]+)", guarded([&](const auto& req, auto& res) {
               std::uint64_t rev = 0;
               if (req.has_param("revision")) rev = parse_uint(req.get_param_value("revision"), "revision");
               else rev = revision_of(body_of(req));
               reply(res, svc.delete_wall(req.matches[1], req.matches[2], rev));
             }));
  srv.Post(sid + "/corners", guarded([&](const auto& req, auto& res) {
             const auto j = body_of(req);
             reply(res, svc.add_corner(req.matches[1], j, revision_of(j)));
           }));
  srv.Post(sid + "/auto", guarded([&](const auto& req, auto& res) {
             reply(res, svc.run_automatic(req.matches[1], revision_of(body_of(req))));
           }));
  srv.Get(sid + "/export", guarded([&](const auto& req, auto& res) { reply(res, svc.export_sessions(req.matches[1])); }));
  srv.Get(sid + "/events", guarded([&](const auto& req, auto& res) {
            auto ch = svc.subscribe(req.matches[1]);
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider("text/event-stream", [ch](std::size_t, httplib::DataSink& sink) {
              for (;;) {
                if (auto m = ch->pop(200)) {
                  const auto ev = "data: " + *m + "\n\n";
                  return sink.write(ev.data(), ev.size());
                }
                if (ch->closed()) {
                  sink.done();
                  return true;
                }
                if (!sink.is_writable()) return false;
              }
            }, [ch](bool) { ch->close(); });
          }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::serve() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  impl_->svc.close_channels();
  impl_->server.stop();
}

}  // namespace a2p::assist
