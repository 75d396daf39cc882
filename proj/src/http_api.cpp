#include "qarena/http_api.hpp"

#include <httplib.h>

namespace qarena {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& detail, const std::vector<std::string>* legal = nullptr) {
  json body = {{"error", code}, {"detail", detail}};
  if (legal) body["legal_actions"] = *legal;
  send_json(res, status, body);
}

// Runs fn and maps failures onto the error payload.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    send_json(res, 200, fn());
  } catch (const ServiceError& e) {
    send_error(res, e.status(), e.code(), e.detail(),
               e.status() == 422 ? &e.legal_actions() : nullptr);
  } catch (const Error& e) {
    send_error(res, 400, e.code(), e.detail());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw ServiceError(400, "bad_request", "body must be a JSON object");
  }
  return body;
}

}  // namespace

std::unique_ptr<httplib::Server> make_http_server(PlayService& service,
                                                  const std::filesystem::path& ui_dir) {
  auto server = std::make_unique<httplib::Server>();
  auto& s = *server;

  s.Get("/api/agents", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return service.list_agents(); });
  });
  s.Get("/api/games", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return service.list_games(); });
  });
  s.Post("/api/match", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service.create_match(parse_body(req)); });
  });
  s.Get(R"(/api/match/([0-9A-Za-z_-]+))",
        [&service](const httplib::Request& req, httplib::Response& res) {
          guarded(res, [&] { return service.get_state(req.matches[1]); });
        });
  s.Post(R"(/api/match/([0-9A-Za-z_-]+)/move)",
         [&service](const httplib::Request& req, httplib::Response& res) {
           guarded(res, [&] { return service.post_move(req.matches[1], parse_body(req)); });
         });

  if (!ui_dir.empty()) s.set_mount_point("/", ui_dir.string());

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_error(res, 404, "not_found", "no route for " + req.method + " " + req.path);
    } else {
      send_error(res, res.status, "http_error", "request failed");
    }
  });
  return server;
}

}  // namespace qarena
