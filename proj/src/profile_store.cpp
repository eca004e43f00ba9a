#include <algorithm>
#include <fstream>
#include <system_error>

#include "devrec/error.hpp"
#include "devrec/profile.hpp"

namespace devrec {

namespace fs = std::filesystem;

ProfileStore::ProfileStore(fs::path root) : root_(std::move(root)) {}

fs::path ProfileStore::path_for(std::string_view user_id) const {
  validate_user_id(user_id);
  return root_ / (std::string(user_id) + ".json");
}

void ProfileStore::ensure_root() const {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    throw Error(ErrorCode::StoreUnavailable, "profile store '" + root_.string() + "' is not a usable directory");
  }
}

bool ProfileStore::exists(std::string_view user_id) const {
  std::error_code ec;
  return fs::is_regular_file(path_for(user_id), ec);
}

void ProfileStore::save(const UserProfile& profile) const {
  ensure_root();
  const auto target = path_for(profile.user_id);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StoreUnavailable, "cannot write '" + tmp.string() + "'");
    out << nlohmann::json(profile).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::StoreUnavailable, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::StoreUnavailable, "cannot replace '" + target.string() + "': " + ec.message());
}

UserProfile ProfileStore::load(std::string_view user_id) const {
  const auto path = path_for(user_id);
  std::error_code ec;
  if (!fs::exists(root_, ec)) {
    throw Error(ErrorCode::UnknownUser, "no profile for '" + std::string(user_id) + "'");
  }
  if (!fs::is_directory(root_, ec)) {
    throw Error(ErrorCode::StoreUnavailable, "profile store '" + root_.string() + "' is not a directory");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnknownUser, "no profile for '" + std::string(user_id) + "'");
  try {
    return nlohmann::json::parse(in).get<UserProfile>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::StoreUnavailable, "corrupt profile '" + path.string() + "': " + e.what());
  }
}

UserProfile ProfileStore::create(const nlohmann::json& form, Timestamp now) const {
  auto profile = create_profile(form, now);
  if (exists(profile.user_id)) {
    throw Error(ErrorCode::DuplicateUser, "profile '" + profile.user_id + "' already exists");
  }
  save(profile);
  return profile;
}

std::vector<std::string> ProfileStore::list_users() const {
  std::vector<std::string> users;
  std::error_code ec;
  if (!fs::is_directory(root_, ec)) return users;
  for (const auto& entry : fs::directory_iterator(root_, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      users.push_back(entry.path().stem().string());
    }
  }
  std::sort(users.begin(), users.end());
  return users;
}

}  // namespace devrec
