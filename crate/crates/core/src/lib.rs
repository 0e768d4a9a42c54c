pub mod agenda_lab;
pub mod dist;
pub mod exact_timing;
pub mod families;
pub mod game;
pub mod perception;
pub mod random_games;
pub mod randomized_timing;
pub mod rational;
pub mod timed_game;
