//! Gridworlds described by a one-character-per-cell layout.
//!
//! Layout file format:
//!
//! ```text
//! rows cols max_steps
//! <rows lines of exactly cols cells>
//! # optional comment lines after the grid
//! ```
//!
//! | char | cell |
//! |------|------|
//! | `.`  | empty |
//! | `S`  | start |
//! | `c`  | small coin (+0.1 on STAY, terminates) |
//! | `C`  | large coin (+1 on STAY, terminates) |
//! | `x`  | small cloud (-0.1 for any action) |
//! | `X`  | large cloud (-10 for any action) |
//! | `Q`  | quicksand (actions fail with probability 0.9) |
//! | `<` `>` `^` `v` | arrow; only the matching action leaves the cell |
//! | `B`  | button cell (empty cell hosting the monitor button) |

use rand::Rng;

use super::EnvOutcome;
use crate::error::{Error, Result};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const UP: usize = 2;
pub const DOWN: usize = 3;
pub const STAY: usize = 4;
pub const N_ACTIONS: usize = 5;
pub const ACTION_NAMES: [&str; N_ACTIONS] = ["LEFT", "RIGHT", "UP", "DOWN", "STAY"];

pub const SMALL_COIN_REWARD: f64 = 0.1;
pub const LARGE_COIN_REWARD: f64 = 1.0;
pub const SMALL_CLOUD_REWARD: f64 = -0.1;
pub const LARGE_CLOUD_REWARD: f64 = -10.0;
pub const QUICKSAND_FAIL_PROB: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Empty,
    Start,
    SmallCoin,
    LargeCoin,
    SmallCloud,
    LargeCloud,
    Quicksand,
    ArrowLeft,
    ArrowRight,
    ArrowUp,
    ArrowDown,
    ButtonCell,
}

impl CellKind {
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '.' => CellKind::Empty,
            'S' => CellKind::Start,
            'c' => CellKind::SmallCoin,
            'C' => CellKind::LargeCoin,
            'x' => CellKind::SmallCloud,
            'X' => CellKind::LargeCloud,
            'Q' => CellKind::Quicksand,
            '<' => CellKind::ArrowLeft,
            '>' => CellKind::ArrowRight,
            '^' => CellKind::ArrowUp,
            'v' => CellKind::ArrowDown,
            'B' => CellKind::ButtonCell,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            CellKind::Empty => '.',
            CellKind::Start => 'S',
            CellKind::SmallCoin => 'c',
            CellKind::LargeCoin => 'C',
            CellKind::SmallCloud => 'x',
            CellKind::LargeCloud => 'X',
            CellKind::Quicksand => 'Q',
            CellKind::ArrowLeft => '<',
            CellKind::ArrowRight => '>',
            CellKind::ArrowUp => '^',
            CellKind::ArrowDown => 'v',
            CellKind::ButtonCell => 'B',
        }
    }

    fn arrow_action(self) -> Option<usize> {
        match self {
            CellKind::ArrowLeft => Some(LEFT),
            CellKind::ArrowRight => Some(RIGHT),
            CellKind::ArrowUp => Some(UP),
            CellKind::ArrowDown => Some(DOWN),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<CellKind>,
    pub max_episode_steps: usize,
}

impl GridLayout {
    #[inline]
    pub fn cell(&self, state: usize) -> CellKind {
        self.cells[state]
    }

    #[inline]
    pub fn coords(&self, state: usize) -> (usize, usize) {
        (state / self.cols, state % self.cols)
    }

    pub fn n_states(&self) -> usize {
        self.rows * self.cols
    }

    pub fn start(&self) -> usize {
        self.cells
            .iter()
            .position(|&c| c == CellKind::Start)
            .expect("validated layout has a start cell")
    }

    /// The button defaults to the start cell unless a `B` cell is present.
    pub fn button(&self) -> usize {
        self.cells
            .iter()
            .position(|&c| c == CellKind::ButtonCell)
            .unwrap_or_else(|| self.start())
    }

    /// Cell reached by a successful move; off-grid moves stay in place.
    fn moved(&self, state: usize, action: usize) -> usize {
        let (r, c) = self.coords(state);
        let (r, c) = match action {
            LEFT if c > 0 => (r, c - 1),
            RIGHT if c + 1 < self.cols => (r, c + 1),
            UP if r > 0 => (r - 1, c),
            DOWN if r + 1 < self.rows => (r + 1, c),
            _ => (r, c),
        };
        r * self.cols + c
    }

    /// Reward for acting in `state`, and whether the action ends the episode.
    fn reward(&self, state: usize, action: usize) -> (f64, bool) {
        match self.cell(state) {
            CellKind::SmallCoin if action == STAY => (SMALL_COIN_REWARD, true),
            CellKind::LargeCoin if action == STAY => (LARGE_COIN_REWARD, true),
            CellKind::SmallCloud => (SMALL_CLOUD_REWARD, false),
            CellKind::LargeCloud => (LARGE_CLOUD_REWARD, false),
            _ => (0.0, false),
        }
    }

    /// Deterministic destination when the action does not fail.
    fn intended(&self, state: usize, action: usize) -> usize {
        match self.cell(state).arrow_action() {
            Some(only) if only != action => state,
            _ => self.moved(state, action),
        }
    }

    /// Samples one transition.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> (usize, f64, bool) {
        assert!(state < self.n_states() && action < N_ACTIONS);
        let (reward, terminated) = self.reward(state, action);
        let next = if self.cell(state) == CellKind::Quicksand
            && rng.gen::<f64>() < QUICKSAND_FAIL_PROB
        {
            state
        } else {
            self.intended(state, action)
        };
        (next, reward, terminated)
    }

    /// Exact outcome distribution of [`GridLayout::step`].
    pub fn outcomes(&self, state: usize, action: usize) -> Vec<EnvOutcome> {
        let (reward, terminated) = self.reward(state, action);
        let target = self.intended(state, action);
        let outcome = |prob, next| EnvOutcome {
            prob,
            next,
            reward,
            terminated,
        };
        if self.cell(state) == CellKind::Quicksand && target != state {
            vec![
                outcome(QUICKSAND_FAIL_PROB, state),
                outcome(1.0 - QUICKSAND_FAIL_PROB, target),
            ]
        } else {
            vec![outcome(1.0, target)]
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.max_episode_steps);
        for r in 0..self.rows {
            out.extend(self.cells[r * self.cols..(r + 1) * self.cols].iter().map(|c| c.to_char()));
            out.push('\n');
        }
        out
    }
}

/// Parses the layout format described in the module docs.
pub fn parse_layout(text: &str) -> Result<GridLayout> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::layout(1, 1, "empty layout"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::layout(
            header_no + 1,
            1,
            "header must be `rows cols max_steps`",
        ));
    }
    let mut nums = [0usize; 3];
    for (i, f) in fields.iter().enumerate() {
        nums[i] = f.parse().map_err(|_| {
            Error::layout(header_no + 1, 1, format!("`{f}` is not a non-negative integer"))
        })?;
    }
    let [rows, cols, max_steps] = nums;
    if rows == 0 || cols == 0 || max_steps == 0 {
        return Err(Error::layout(header_no + 1, 1, "dimensions and max_steps must be positive"));
    }

    let mut cells = Vec::with_capacity(rows * cols);
    let mut grid_rows = 0;
    for (line_no, line) in lines {
        if line.trim_start().starts_with('#') {
            continue;
        }
        if grid_rows == rows {
            return Err(Error::layout(line_no + 1, 1, format!("expected {rows} grid rows, found more")));
        }
        let row: Vec<char> = line.trim_end().chars().collect();
        if row.len() != cols {
            return Err(Error::layout(
                line_no + 1,
                row.len().min(cols) + 1,
                format!("ragged row: expected {cols} cells, found {}", row.len()),
            ));
        }
        for (col, ch) in row.into_iter().enumerate() {
            let cell = CellKind::from_char(ch)
                .ok_or_else(|| Error::layout(line_no + 1, col + 1, format!("unknown cell `{ch}`")))?;
            cells.push(cell);
        }
        grid_rows += 1;
    }
    let last_line = text.lines().count().max(1);
    if grid_rows != rows {
        return Err(Error::layout(last_line, 1, format!("expected {rows} grid rows, found {grid_rows}")));
    }

    let count = |kind| cells.iter().filter(|&&c| c == kind).count();
    if count(CellKind::Start) != 1 {
        return Err(Error::layout(last_line, 1, "layout needs exactly one start cell `S`"));
    }
    if count(CellKind::LargeCoin) == 0 {
        return Err(Error::layout(last_line, 1, "layout needs at least one large coin `C`"));
    }
    if count(CellKind::ButtonCell) > 1 {
        return Err(Error::layout(last_line, 1, "at most one button cell `B` is allowed"));
    }
    Ok(GridLayout {
        rows,
        cols,
        cells,
        max_episode_steps: max_steps,
    })
}
