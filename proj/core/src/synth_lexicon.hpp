#pragma once

#include <array>
#include <string_view>

namespace icd::detail {

inline constexpr std::array<std::string_view, 100> kFirstNames = {
    "James",   "Mary",     "Robert",  "Patricia", "John",    "Jennifer", "Michael", "Linda",   "David",   "Elizabeth",
    "William", "Barbara",  "Richard", "Susan",    "Joseph",  "Jessica",  "Thomas",  "Sarah",   "Charles", "Karen",
    "Daniel",  "Lisa",     "Matthew", "Nancy",    "Anthony", "Betty",    "Mark",    "Sandra",  "Donald",  "Margaret",
    "Steven",  "Ashley",   "Andrew",  "Kimberly", "Paul",    "Emily",    "Joshua",  "Donna",   "Kenneth", "Michelle",
    "Kevin",   "Carol",    "Brian",   "Amanda",   "George",  "Melissa",  "Timothy", "Deborah", "Ronald",  "Stephanie",
    "Jason",   "Rebecca",  "Edward",  "Sharon",   "Jeffrey", "Laura",    "Ryan",    "Cynthia", "Jacob",   "Dorothy",
    "Gary",    "Amy",      "Nicholas", "Kathleen", "Eric",   "Angela",   "Jonathan", "Shirley", "Stephen", "Emma",
    "Larry",   "Brenda",   "Justin",  "Pamela",   "Scott",   "Nicole",   "Brandon", "Anna",    "Benjamin", "Samantha",
    "Samuel",  "Katherine", "Gregory", "Christine", "Alexander", "Debra", "Patrick", "Rachel",  "Frank",   "Carolyn",
    "Raymond", "Janet",    "Jack",    "Maria",    "Dennis",  "Olivia",   "Jerry",   "Heather", "Tyler",   "Helen",
};

inline constexpr std::array<std::string_view, 120> kLastNames = {
    "Smith",     "Johnson",  "Williams", "Brown",     "Jones",    "Garcia",   "Miller",    "Davis",     "Rodriguez",
    "Martinez",  "Hernandez", "Lopez",   "Gonzalez",  "Wilson",   "Anderson", "Thomas",    "Taylor",    "Moore",
    "Jackson",   "Martin",   "Lee",      "Perez",     "Thompson", "White",    "Harris",    "Sanchez",   "Clark",
    "Ramirez",   "Lewis",    "Robinson", "Walker",    "Young",    "Allen",    "King",      "Wright",    "Scott",
    "Torres",    "Nguyen",   "Hill",     "Flores",    "Green",    "Adams",    "Nelson",    "Baker",     "Hall",
    "Rivera",    "Campbell", "Mitchell", "Carter",    "Roberts",  "Gomez",    "Phillips",  "Evans",     "Turner",
    "Diaz",      "Parker",   "Cruz",     "Edwards",   "Collins",  "Reyes",    "Stewart",   "Morris",    "Morales",
    "Murphy",    "Cook",     "Rogers",   "Gutierrez", "Ortiz",    "Morgan",   "Cooper",    "Peterson",  "Bailey",
    "Reed",      "Kelly",    "Howard",   "Ramos",     "Kim",      "Cox",      "Ward",      "Richardson", "Watson",
    "Brooks",    "Chavez",   "Wood",     "James",     "Bennett",  "Gray",     "Mendoza",   "Ruiz",      "Hughes",
    "Price",     "Alvarez",  "Castillo", "Sanders",   "Patel",    "Myers",    "Long",      "Ross",      "Foster",
    "Jimenez",   "Powell",   "Jenkins",  "Perry",     "Russell",  "Sullivan", "Bell",      "Coleman",   "Butler",
    "Henderson", "Barnes",   "Gonzales", "Fisher",    "Vasquez",  "Simmons",  "Romero",    "Jordan",    "Patterson",
    "Alexander", "Hamilton", "Graham",
};

inline constexpr std::array<std::string_view, 48> kCities = {
    "New York",  "London",    "Sydney",     "Toronto",   "Berlin",     "Paris",     "Madrid",    "Rome",
    "Tokyo",     "Seoul",     "Melbourne",  "Chicago",   "Boston",     "Seattle",   "Austin",    "Denver",
    "Dublin",    "Amsterdam", "Vienna",     "Prague",    "Lisbon",     "Oslo",      "Stockholm", "Helsinki",
    "Warsaw",    "Athens",    "Istanbul",   "Cairo",     "Nairobi",    "Lagos",     "Mumbai",    "Delhi",
    "Singapore", "Jakarta",   "Manila",     "Bangkok",   "Auckland",   "Brisbane",  "Perth",     "Adelaide",
    "Montreal",  "Vancouver", "Mexico City", "Lima",     "Santiago",   "Bogota",    "Miami",     "Atlanta",
};

inline constexpr std::array<std::string_view, 120> kWords = {
    "music",    "coffee",   "travel",    "photography", "design",   "football", "science",  "books",    "cooking",
    "running",  "startup",  "engineer",  "teacher",     "writer",   "artist",   "gamer",    "developer", "student",
    "nature",   "hiking",   "movies",    "fashion",     "fitness",  "yoga",     "garden",   "history",  "politics",
    "economics", "finance", "marketing", "research",    "health",   "medicine", "nursing",  "parent",   "dog",
    "cat",      "lover",    "fan",       "official",    "account",  "news",     "updates",  "daily",    "weekly",
    "podcast",  "host",     "founder",   "director",    "manager",  "analyst",  "coach",    "player",   "team",
    "club",     "city",     "local",     "global",      "digital",  "creative", "studio",   "agency",   "community",
    "volunteer", "climate", "energy",    "ocean",       "mountain", "sunset",   "baking",   "painting", "poetry",
    "theatre",  "dance",    "guitar",    "piano",       "jazz",     "rock",     "vinyl",    "anime",    "comics",
    "chess",    "cycling",  "surfing",   "skiing",      "tennis",   "cricket",  "basketball", "baseball", "soccer",
    "software", "hardware", "robotics",  "data",        "cloud",    "security", "privacy",  "open",     "source",
    "linux",    "python",   "rust",      "javascript",  "mobile",   "apps",     "games",    "crypto",   "markets",
    "wine",     "tea",      "vegan",     "foodie",      "recipes",  "family",   "friends",  "faith",    "dreams",
    "adventure", "explorer", "wanderer",
};

}  // namespace icd::detail
