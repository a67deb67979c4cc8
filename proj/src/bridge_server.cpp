#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "rubble/bridge.hpp"

namespace rubble {

namespace {

constexpr std::size_t kMaxLineBytes = 16u << 20;

struct Command {
  enum class Kind { Open, Line, Close, Oversized } kind;
  Bridge::SessionId session;
  std::string line;
};

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

struct BridgeServer::Impl {
  struct Client {
    int fd = -1;
    std::thread reader;
  };

  explicit Impl(Bridge b) : bridge(std::move(b)) {}

  Bridge bridge;
  int listen_fd = -1;
  std::uint16_t port = 0;
  std::atomic<bool> stopping{false};

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::deque<Command> queue;

  std::mutex clients_mutex;
  std::map<Bridge::SessionId, Client> clients;
  Bridge::SessionId next_session = 1;

  void push(Command c) {
    {
      std::lock_guard lock(queue_mutex);
      queue.push_back(std::move(c));
    }
    queue_cv.notify_one();
  }

  void read_loop(Bridge::SessionId session, int fd) {
    std::string buffer;
    char chunk[65536];
    while (true) {
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
        std::string line = buffer.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos)
          push({Command::Kind::Line, session, std::move(line)});
      }
      buffer.erase(0, start);
      if (buffer.size() > kMaxLineBytes) {
        push({Command::Kind::Oversized, session, {}});
        break;
      }
    }
    push({Command::Kind::Close, session, {}});
  }

  void accept_loop() {
    while (!stopping) {
      pollfd p{listen_fd, POLLIN, 0};
      const int r = ::poll(&p, 1, 100);
      if (r <= 0) continue;
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      timeval tv{5, 0};
      ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
      std::lock_guard lock(clients_mutex);
      const auto session = next_session++;
      push({Command::Kind::Open, session, {}});
      auto& client = clients[session];
      client.fd = fd;
      client.reader = std::thread([this, session, fd] { read_loop(session, fd); });
      spdlog::info("bridge: client {} connected", session);
    }
  }

  void deliver(const std::vector<Bridge::Outgoing>& out) {
    std::lock_guard lock(clients_mutex);
    for (const auto& o : out) {
      auto it = clients.find(o.session);
      if (it == clients.end() || it->second.fd < 0) continue;
      std::string line = o.line;
      line += '\n';
      if (!send_all(it->second.fd, line)) {
        spdlog::warn("bridge: dropping client {} after failed write", o.session);
        ::shutdown(it->second.fd, SHUT_RDWR);
      }
    }
  }

  void close_client(Bridge::SessionId session) {
    std::thread reader;
    {
      std::lock_guard lock(clients_mutex);
      auto it = clients.find(session);
      if (it == clients.end()) return;
      reader = std::move(it->second.reader);
      ::shutdown(it->second.fd, SHUT_RDWR);
      ::close(it->second.fd);
      clients.erase(it);
    }
    if (reader.joinable()) reader.join();
    spdlog::info("bridge: client {} disconnected", session);
  }

  void handle(Command& c) {
    switch (c.kind) {
      case Command::Kind::Open:
        bridge.open_session(c.session);
        break;
      case Command::Kind::Line:
        deliver(bridge.handle_line(c.session, c.line));
        break;
      case Command::Kind::Oversized:
        deliver({{c.session, R"({"op":"status","level":"error","msg":"line exceeds maximum length"})"}});
        break;
      case Command::Kind::Close:
        bridge.close_session(c.session);
        close_client(c.session);
        break;
    }
  }

  void shutdown_all() {
    std::vector<Bridge::SessionId> sessions;
    {
      std::lock_guard lock(clients_mutex);
      for (auto& [id, client] : clients) {
        ::shutdown(client.fd, SHUT_RDWR);
        sessions.push_back(id);
      }
    }
    for (auto id : sessions) close_client(id);
  }
};

BridgeServer::BridgeServer(Bridge bridge, const std::string& host, std::uint16_t port)
    : impl_(std::make_unique<Impl>(std::move(bridge))) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    throw BindError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
  std::string last_error = "no usable address";
  for (addrinfo* a = res; a; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      impl_->listen_fd = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (impl_->listen_fd < 0)
    throw BindError("cannot listen on " + host + ":" + std::to_string(port) + ": " + last_error);
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
  impl_->port = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                                 : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

BridgeServer::~BridgeServer() {
  stop();
  impl_->shutdown_all();
  if (impl_->listen_fd >= 0) ::close(impl_->listen_fd);
}

std::uint16_t BridgeServer::port() const { return impl_->port; }

void BridgeServer::stop() {
  impl_->stopping = true;
  impl_->queue_cv.notify_all();
}

void BridgeServer::run(const std::atomic<bool>* stop_flag) {
  auto& im = *impl_;
  std::thread acceptor([&im] { im.accept_loop(); });
  auto should_stop = [&] { return im.stopping || (stop_flag && stop_flag->load()); };
  while (!should_stop()) {
    std::unique_lock lock(im.queue_mutex);
    im.queue_cv.wait_for(lock, std::chrono::milliseconds(100), [&] { return !im.queue.empty() || im.stopping; });
    while (!im.queue.empty() && !should_stop()) {
      Command c = std::move(im.queue.front());
      im.queue.pop_front();
      lock.unlock();
      try {
        im.handle(c);
      } catch (const std::exception& e) {
        spdlog::error("bridge: {}", e.what());
      }
      lock.lock();
    }
  }
  im.stopping = true;
  acceptor.join();
  im.shutdown_all();
}

}  // namespace rubble
