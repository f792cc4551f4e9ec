use std::io::Write;

use crate::Result;

/// Actions and team reward of every step of one episode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeTrace {
    pub id: u64,
    pub actions: Vec<Vec<usize>>,
    pub rewards: Vec<f64>,
}

impl EpisodeTrace {
    pub fn push(&mut self, actions: &[usize], reward: f64) {
        self.actions.push(actions.to_vec());
        self.rewards.push(reward);
    }
}

/// Writes `episode,t,action_0..action_{n-1},team_reward` rows.
pub fn write_episode_csv<W: Write>(mut w: W, n_agents: usize, traces: &[EpisodeTrace]) -> Result<()> {
    let mut header = vec!["episode".to_string(), "t".to_string()];
    header.extend((0..n_agents).map(|i| format!("action_{i}")));
    header.push("team_reward".into());
    writeln!(w, "{}", header.join(","))?;
    for trace in traces {
        for (t, (actions, reward)) in trace.actions.iter().zip(&trace.rewards).enumerate() {
            let acts: Vec<String> = actions.iter().map(usize::to_string).collect();
            writeln!(w, "{},{},{},{}", trace.id, t, acts.join(","), reward)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut trace = EpisodeTrace {
            id: 4,
            ..Default::default()
        };
        trace.push(&[0, 2], 1.5);
        trace.push(&[1, 1], -0.25);
        let mut out = Vec::new();
        write_episode_csv(&mut out, 2, &[trace]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "episode,t,action_0,action_1,team_reward\n4,0,0,2,1.5\n4,1,1,1,-0.25\n"
        );
    }
}
