use serde::{Deserialize, Serialize};

use crate::knowledge::EntityId;

/// Persons boarded by one vehicle at a rescue point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Load {
    pub wheelchair: u32,
    pub ambulant: u32,
}

impl Load {
    pub fn total(self) -> u32 {
        self.wheelchair + self.ambulant
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadCandidate {
    pub id: EntityId,
    pub t_to_rp: u64,
    pub capacity: u32,
    pub wheelchair_slots: u32,
}

/// Boards one vehicle given what is still waiting. Wheelchair users take
/// slots first, ambulant evacuees fill the seats that remain.
///
/// Because a vehicle's load only depends on what earlier vehicles left
/// behind, applying this in arrival order reproduces [`load_rule`].
pub fn board(capacity: u32, wheelchair_slots: u32, wheelchair_left: u32, ambulant_left: u32) -> Load {
    let wheelchair = wheelchair_slots.min(capacity).min(wheelchair_left);
    let ambulant = (capacity - wheelchair).min(ambulant_left);
    Load {
        wheelchair,
        ambulant,
    }
}

/// Splits a rescue point's demand across the vehicles sent there.
///
/// Vehicles are served by ascending `t_to_rp`, ties by id. Wheelchair users
/// go into wheelchair slots first; the remaining evacuees fill the remaining
/// seats in the same order. Without wheelchair enforcement every passenger
/// seat counts as a slot. Loads are returned in input order.
pub fn load_rule(
    candidates: &[LoadCandidate],
    evacuees: u32,
    wheelchair_evacuees: u32,
    enforce_wheelchair: bool,
) -> Vec<Load> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (a, b) = (&candidates[a], &candidates[b]);
        a.t_to_rp.cmp(&b.t_to_rp).then_with(|| a.id.cmp(&b.id))
    });
    let mut wheelchair_left = wheelchair_evacuees.min(evacuees);
    let mut ambulant_left = evacuees - wheelchair_left;
    let mut loads = vec![Load::default(); candidates.len()];

    // Slots pass, then seats pass.
    for &i in &order {
        let c = &candidates[i];
        let slots = if enforce_wheelchair {
            c.wheelchair_slots
        } else {
            c.capacity
        };
        let w = slots.min(c.capacity).min(wheelchair_left);
        loads[i].wheelchair = w;
        wheelchair_left -= w;
    }
    for &i in &order {
        let c = &candidates[i];
        let a = (c.capacity - loads[i].wheelchair).min(ambulant_left);
        loads[i].ambulant = a;
        ambulant_left -= a;
    }
    loads
}
