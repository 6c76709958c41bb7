#pragma once

#include <string>
#include <vector>

namespace amli {

/// Formats a double with 17 significant digits so every value round-trips
/// exactly through text and repeated runs diff byte-identical.
std::string fmt_double(double v);

std::string fmt_int(long long v);

/// Minimal streaming JSON writer. We emit reports by hand instead of through
/// a JSON library so that number formatting stays under our control.
class JsonWriter {
public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(double v);
  JsonWriter& value(long long v);
  JsonWriter& value(int v);
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value_array(const std::vector<double>& v);
  JsonWriter& value_array(const std::vector<int>& v);

  const std::string& str() const { return out_; }

private:
  void separator();
  std::string out_;
  std::vector<bool> first_in_scope_;
  bool pending_key_ = false;
};

std::string json_escape(const std::string& s);

/// Writes `text` to `path`, creating parent directories as needed.
void write_text_file(const std::string& path, const std::string& text);

std::string read_text_file(const std::string& path);

}  // namespace amli
