#ifndef CAUSAL_SERVICE_H_
#define CAUSAL_SERVICE_H_

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "causal/tabular.h"

namespace httplib {
class Server;
}

namespace causal::service {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr std::size_t kMaxDatasets = 16;
inline constexpr std::size_t kMaxStoreBytes = 100u << 20;

struct StoredDataset {
  std::string id;
  DataTable table;
  LoadReport report;
};

// Bounded LRU store of uploaded datasets. Every operation holds the lock for
// its whole duration; readers get a shared_ptr that outlives eviction.
class DatasetStore {
 public:
  explicit DatasetStore(std::size_t max_datasets = kMaxDatasets,
                        std::size_t max_bytes = kMaxStoreBytes)
      : max_datasets_(max_datasets), max_bytes_(max_bytes) {}

  // Returns the stored entry; the id is a content hash, so uploading the same
  // data twice yields the same id. Returns nullptr when the table alone
  // exceeds the byte cap.
  std::shared_ptr<const StoredDataset> put(LoadedTable loaded);
  std::shared_ptr<const StoredDataset> get(const std::string& id);
  std::size_t size() const;
  std::size_t bytes() const;

 private:
  struct Entry {
    std::shared_ptr<const StoredDataset> data;
    std::size_t bytes;
  };

  void evict_locked();

  mutable std::mutex mu_;
  std::list<Entry> entries_;  // most recently used first
  std::size_t bytes_ = 0;
  std::size_t max_datasets_;
  std::size_t max_bytes_;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

// Transport-independent handlers. Errors come back as
// {"code", "message", "span"?} with status 400 (malformed request),
// 404 (unknown dataset or route), 413 (dataset too large) or 422 (the
// request was well formed but the operation failed).
class Api {
 public:
  explicit Api(DatasetStore& store) : store_(store) {}

  // POST routes with JSON bodies: parse, identify, implications, transport,
  // validate, estimate, srm.
  Response post(std::string_view route, std::string_view body);
  // Raw CSV text of an uploaded dataset.
  Response upload(std::string_view csv);
  Response health() const;

 private:
  DatasetStore& store_;
};

// Registers the /api routes (and static assets under "/" when static_dir is
// non-empty) on `server`.
void mount(httplib::Server& server, Api& api, const std::string& static_dir);

// OpenAPI 3 description of the routes above.
nlohmann::json openapi();

}  // namespace causal::service

#endif  // CAUSAL_SERVICE_H_
