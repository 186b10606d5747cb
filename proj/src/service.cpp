#include "mm/service.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include "mm/error.hpp"

namespace mm {

namespace {

struct Event {
  enum class Kind { kLine, kTick, kLearned, kEof } kind;
  std::string line;
  LearnOutcome outcome;
};

class EventQueue {
 public:
  void push(Event e) {
    {
      std::lock_guard lock(mu_);
      events_.push_back(std::move(e));
    }
    cv_.notify_one();
  }

  Event pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !events_.empty(); });
    Event e = std::move(events_.front());
    events_.pop_front();
    return e;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Event> events_;
};

class Ticker {
 public:
  Ticker(EventQueue& queue, double rate, const std::atomic<bool>& playing)
      : thread_([this, &queue, rate, &playing] {
          const auto period = std::chrono::duration<double>(1.0 / rate);
          std::unique_lock lock(mu_);
          while (!cv_.wait_for(lock, period, [&] { return stop_; }))
            if (playing.load()) queue.push({Event::Kind::kTick, {}, {}});
        }) {}

  ~Ticker() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_one();
    thread_.join();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::thread thread_;
};

class FdLineReader {
 public:
  explicit FdLineReader(int fd) : fd_(fd) {}

  std::optional<std::string> operator()() {
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (buffer_.empty()) return std::nullopt;
        return std::exchange(buffer_, {});
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

nlohmann::json notification(const std::string& event, nlohmann::json payload) {
  return nlohmann::json{{"event", event}, {"payload", std::move(payload)}};
}

void write_fd(int fd, const std::string& line) {
  std::string data = line + '\n';
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;  // client went away
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

Session run_service(const LineReader& read, const LineWriter& write,
                    const ServiceOptions& options, ServiceStats* stats) {
  ServiceStats localStats;
  ServiceStats& st = stats != nullptr ? *stats : localStats;
  Session session(options.session);
  EventQueue queue;
  std::atomic<bool> playing = false;

  std::thread reader([&] {
    while (auto line = read()) {
      if (line->find_first_not_of(" \t\r") == std::string::npos) continue;
      queue.push({Event::Kind::kLine, std::move(*line), {}});
    }
    queue.push({Event::Kind::kEof, {}, {}});
  });
  std::optional<Ticker> ticker;
  if (options.ticker) ticker.emplace(queue, session.tick_rate(), playing);

  std::thread worker;
  bool inFlight = false;
  std::optional<std::uint64_t> attempted;  // edit generation of the last job taken
  auto emit = [&](const std::vector<nlohmann::json>& notes) {
    for (const auto& n : notes) write(n.dump());
  };
  auto maybe_start_learn = [&] {
    if (!options.autoRelearn || inFlight || !session.relearn_policy()) return false;
    if (attempted == session.edit_generation()) return false;
    attempted = session.edit_generation();
    std::optional<LearnJob> job;
    try {
      job = session.learn_job();
    } catch (const std::exception& e) {
      emit({notification("learn.failed", {{"message", e.what()}})});
      return false;
    }
    if (!job) return false;
    if (worker.joinable()) worker.join();
    inFlight = true;
    ++st.backgroundLearns;
    emit({notification("learn.started", {{"frameCount", job->frames.size()}})});
    worker = std::thread([&queue, job = std::move(*job)] {
      queue.push({Event::Kind::kLearned, {}, run_learn_job(job)});
    });
    return true;
  };

  bool eof = false;
  for (;;) {
    if (eof && !inFlight && !maybe_start_learn()) break;
    Event ev = queue.pop();
    switch (ev.kind) {
      case Event::Kind::kLine: {
        Reply reply = session.handle_line(ev.line);
        // A response closes its request, so events it caused go out first.
        emit(reply.notifications);
        if (!reply.response.is_null()) write(reply.response.dump());
        break;
      }
      case Event::Kind::kTick:
        emit(session.tick());
        break;
      case Event::Kind::kLearned: {
        inFlight = false;
        auto notes = session.apply_learn(ev.outcome);
        if (notes.empty()) ++st.staleLearns;
        emit(notes);
        break;
      }
      case Event::Kind::kEof:
        eof = true;
        break;
    }
    playing = session.playing();
    maybe_start_learn();
  }

  ticker.reset();
  reader.join();
  if (worker.joinable()) worker.join();
  return session;
}

void serve_stdio(const ServiceOptions& options) {
  run_service(
      [] () -> std::optional<std::string> {
        std::string line;
        if (!std::getline(std::cin, line)) return std::nullopt;
        return line;
      },
      [](const std::string& line) { std::cout << line << '\n' << std::flush; }, options);
}

void serve_unix_socket(const std::filesystem::path& socketPath, const ServiceOptions& options,
                       std::optional<int> maxConnections) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string path = socketPath.string();
  if (path.empty() || path.size() >= sizeof addr.sun_path)
    throw IoError("socket path '" + path + "' is empty or too long");
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);

  const int listener = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (listener < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  ::unlink(path.c_str());
  if (::bind(listener, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listener, 4) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listener);
    throw IoError("cannot listen on '" + path + "': " + why);
  }

  for (int served = 0; !maxConnections || served < *maxConnections;) {
    const int client = ::accept(listener, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      ::close(listener);
      throw IoError("accept: " + why);
    }
    FdLineReader reader(client);
    run_service(std::ref(reader), [client](const std::string& line) { write_fd(client, line); },
                options);
    ::close(client);
    ++served;
  }
  ::close(listener);
  ::unlink(path.c_str());
}

}  // namespace mm
