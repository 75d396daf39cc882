#pragma once

#include <filesystem>
#include <memory>

#include "qarena/play_service.hpp"

namespace httplib {
class Server;
}

namespace qarena {

// Registers the /api routes of `service` on a fresh server. When ui_dir is
// set its files are served from "/".
std::unique_ptr<httplib::Server> make_http_server(PlayService& service,
                                                  const std::filesystem::path& ui_dir = {});

}  // namespace qarena
