//! Render a generated scenario as ASCII art.
//!
//! Usage: `cargo run --example viz -- [family] [seed]`
//! Legend: `#` wall, `.` plain floor, `g` marker, `h` hallway label,
//! `r` room label, `S`/`G` start and goal.

use navsel::envgen::{generate, EnvFamily, EnvParams, Scenario};
use navsel::gridmap::{Cell, CellState};

fn render(s: &Scenario) {
    let m = &s.true_map;
    for y in 0..m.height() {
        let mut line = String::new();
        for x in 0..m.width() {
            let c = Cell::new(x, y);
            let ch = if c == s.start {
                'S'
            } else if c == s.goal {
                'G'
            } else {
                match m.get(c) {
                    CellState::Occupied => '#',
                    CellState::Unknown => '?',
                    CellState::Free => match m.feature(c) {
                        0 => '.',
                        1 => 'g',
                        2 => 'h',
                        3 => 'r',
                        _ => '+',
                    },
                }
            };
            line.push(ch);
        }
        println!("{line}");
    }
    println!(
        "id={} start=({},{}) goal=({},{})",
        s.id, s.start.x, s.start.y, s.goal.x, s.goal.y
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let family = args
        .get(1)
        .map(|s| EnvFamily::from_slug(s).expect("valid family slug"))
        .unwrap_or(EnvFamily::MazeGreen);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let scenario = generate(family, &EnvParams::default(), seed).expect("generation");
    render(&scenario);
}
