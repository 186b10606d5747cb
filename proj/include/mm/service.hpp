#pragma once

// Newline-delimited JSON transport around a Session.
//
// One thread owns the session and processes, in arrival order, client lines,
// Play Mode ticks (posted by a ticker thread while a play session runs) and
// finished background learns. At most one background learn is in flight;
// edits made while it runs make its result stale, and a fresh learn starts
// once it returns.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "mm/session.hpp"

namespace mm {

using LineReader = std::function<std::optional<std::string>()>;
using LineWriter = std::function<void(const std::string&)>;

struct ServiceOptions {
  SessionOptions session;
  bool autoRelearn = false;  // relearn in the background after each edit
  bool ticker = true;        // push play.frame at the session's tick rate
};

struct ServiceStats {
  int backgroundLearns = 0;  // started
  int staleLearns = 0;       // finished after a newer edit and discarded
};

// Serves one client until its input ends, then waits for any background
// learn (relearning once more if edits are still unlearned) and returns the
// final session.
Session run_service(const LineReader& read, const LineWriter& write,
                    const ServiceOptions& options, ServiceStats* stats = nullptr);

void serve_stdio(const ServiceOptions& options);

// Listens on a Unix stream socket, one session per connection, handled one
// after another. Returns after `maxConnections` connections if given,
// otherwise runs until the process ends. Throws IoError on socket failures.
void serve_unix_socket(const std::filesystem::path& socketPath, const ServiceOptions& options,
                       std::optional<int> maxConnections = std::nullopt);

}  // namespace mm
