"""Regenerate the shipped scenario preset files from one catalog."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "bluewall" / "scenarios"

SUBNETS = {
    "Servers": {
        "name": "Servers",
        "node_scale": 30,
        "entry_count": 2,
        "hvn_assets": ["Apache Web Server", "MySQL Database Server",
                       "Windows Server 2012/2016"],
        "edge_density": 0.15,
        "gateways": [],
    },
    "Dep1": {
        "name": "Dep1",
        "node_scale": 100,
        "entry_count": 5,
        "hvn_assets": ["R&D Workstation", "Internal Code Repository Server"],
        "edge_density": 0.06,
        "gateways": [{"to": "Servers", "links": 2}],
    },
    "Dep2": {
        "name": "Dep2",
        "node_scale": 100,
        "entry_count": 6,
        "hvn_assets": ["Management Workstation", "Internal File Share Server"],
        "edge_density": 0.06,
        "gateways": [{"to": "Servers", "links": 2}],
    },
    "Dep3": {
        "name": "Dep3",
        "node_scale": 100,
        "entry_count": 4,
        "hvn_assets": ["Technician Workstation", "Network Monitoring Server",
                       "Patch Management Server"],
        "edge_density": 0.06,
        "gateways": [{"to": "Servers", "links": 2}],
    },
    "Dep4": {
        "name": "Dep4",
        "node_scale": 100,
        "entry_count": 5,
        "hvn_assets": ["Customer Relations Management (CRM) Server", "Email Server"],
        "edge_density": 0.06,
        "gateways": [{"to": "Servers", "links": 2}],
    },
    "Dep5": {
        "name": "Dep5",
        "node_scale": 20,
        "entry_count": 3,
        "hvn_assets": ["IT Administrator Workstation", "DNS Server"],
        "edge_density": 0.2,
        "gateways": [{"to": "Servers", "links": 2}],
    },
}

CONTEXT = {
    "Servers": {
        "exposure": "Core server room subnet. Only two hardened entry points face the perimeter; every department subnet routes into it through gateway links.",
        "vulnerability_profile": "Long-lived service hosts with infrequent patch windows, since restarts interrupt shared services; several nodes run behind on updates.",
        "assets": "Hosts the organisation's critical services: the Apache web server, the MySQL database server, and Windows Server 2012/2016 machines running shared enterprise workloads.",
        "service_continuity": "Highest continuity tier. Isolating or resetting nodes here interrupts services for every department, so disruptive actions carry real cost.",
    },
    "Dep1": {
        "exposure": "Research and development department subnet with five perimeter entry nodes; reaches the server room over two gateway links.",
        "vulnerability_profile": "Developer workstations run varied toolchains and locally installed software, leaving an uneven patch surface.",
        "assets": "Key assets are the R&D workstation pool and the internal code repository server holding proprietary source.",
        "service_continuity": "Research work tolerates short outages, but losing the code repository stalls every development team.",
    },
    "Dep2": {
        "exposure": "Management department subnet with six entry nodes, the widest perimeter among the department networks.",
        "vulnerability_profile": "Office hosts process external documents and mail attachments daily, a common phishing and macro entry path.",
        "assets": "Key assets are the management workstation group and the internal file share server carrying financial and administrative records.",
        "service_continuity": "Administrative workflows pause safely for short periods; the file share must return quickly after any containment.",
    },
    "Dep3": {
        "exposure": "Technician department subnet with four entry nodes; staff hold elevated privileges for infrastructure work.",
        "vulnerability_profile": "Hosts run remote-administration tooling whose credentials and agents are attractive lateral-movement targets.",
        "assets": "Key assets are technician workstations, the network monitoring server, and the patch management server that pushes updates fleet-wide.",
        "service_continuity": "Monitoring and patch distribution must stay available; losing them blinds operations and freezes update rollout.",
    },
    "Dep4": {
        "exposure": "Secretary and operations subnet with five entry nodes and constant external-facing traffic to customers.",
        "vulnerability_profile": "Customer-facing mailboxes and CRM sessions accept untrusted input continuously, so exposure to crafted content is high.",
        "assets": "Key assets are the customer relations management server and the email server.",
        "service_continuity": "Email and CRM are business-hours critical; extended isolation directly interrupts customer communication.",
    },
    "Dep5": {
        "exposure": "IT department subnet, small and tightly scoped, with three entry nodes and administrative reach into core services.",
        "vulnerability_profile": "Few hosts but broad privileges; any compromise here grants infrastructure-level leverage.",
        "assets": "Key assets are the IT administrator workstation and the DNS server the whole network resolves through.",
        "service_continuity": "DNS outages cascade to every subnet within minutes; containment here must be brief and targeted.",
    },
}

SCENARIOS = {
    "sce1": {"subnets": ["Servers"], "attacker_count": 6, "attack_policy": "recon"},
    "sce2": {"subnets": ["Servers"], "attacker_count": 7, "attack_policy": "recon"},
    "sce3": {"subnets": ["Servers"], "attacker_count": 8, "attack_policy": "recon"},
    "sce4": {"subnets": ["Servers", "Dep1", "Dep2"], "attacker_count": 6,
             "attack_policy": "recon"},
    "sce5": {"subnets": ["Servers", "Dep1", "Dep2"], "attacker_count": 6,
             "attack_policy": "penetrate"},
    "sce6": {"subnets": ["Servers", "Dep1", "Dep2"], "attacker_count": 6,
             "attack_policy": "impact"},
    "sce7": {"subnets": ["Servers", "Dep1", "Dep2", "Dep3", "Dep4", "Dep5"],
             "attacker_count": 6, "attack_policy": "recon"},
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, sce in SCENARIOS.items():
        members = sce["subnets"]
        subnets = []
        for sub in members:
            entry = {k: v for k, v in SUBNETS[sub].items()}
            entry["gateways"] = [g for g in entry["gateways"] if g["to"] in members]
            subnets.append(entry)
        doc = {
            "name": name,
            "subnets": subnets,
            "vulnerability": {"low": 0.1, "high": 0.9},
            "attacker_count": sce["attacker_count"],
            "attack_policy": sce["attack_policy"],
            "attacker_skill": 0.7,
            "max_steps": 100,
            "context": {sub: CONTEXT[sub] for sub in members},
        }
        path = OUT / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print("wrote", path)


if __name__ == "__main__":
    main()
