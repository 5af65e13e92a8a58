#pragma once

#include <memory>
#include <string>

#include "a2p/assist/service.hpp"

namespace a2p::assist {

// JSON over HTTP for AssistService. Errors answer {"error": message} with
// status 400, 404 or 409. Proposal pushes are served as server-sent events on
// GET /sessions/{id}/events, one {"type":"proposals",...} object per event.
//
//   POST   /sessions                         create_session body
//   GET    /sessions/{id}/state
//   GET    /sessions/{id}/proposals?n=
//   POST   /sessions/{id}/accept             {count, revision}
//   POST   /sessions/{id}/reject             {revision}
//   GET    /sessions/{id}/alternatives
//   POST   /sessions/{id}/alternatives/pick  {rank, revision}
//   POST   /sessions/{id}/walls              {wall, revision} or wall fields + revision
//   PUT    /sessions/{id}/walls/{wid}        same
//   DELETE /sessions/{id}/walls/{wid}?revision=
//   POST   /sessions/{id}/corners            {x, y, revision}
//   POST   /sessions/{id}/auto               {revision}
//   GET    /sessions/{id}/export
//   GET    /sessions/{id}/events
class HttpServer {
 public:
  explicit HttpServer(AssistService& service);
  ~HttpServer();

  // Returns the bound port, or -1.
  int bind(const std::string& host, int port = 0);
  // Blocks until stop().
  bool serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace a2p::assist
