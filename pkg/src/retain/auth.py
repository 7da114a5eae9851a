"""Accounts, sessions, and role gating.

Sign-ups land as role=pending and stay locked out of protected endpoints
until an admin approves them. Passwords are salted PBKDF2-HMAC-SHA256
with constant-time comparison; failed logins always report the same
"invalid credentials" so callers cannot enumerate accounts.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import time
from dataclasses import dataclass

ROLE_PENDING = "pending"
ROLE_MANAGER = "manager"
ROLE_ADMIN = "admin"
ROLES = (ROLE_PENDING, ROLE_MANAGER, ROLE_ADMIN)

MIN_PASSWORD_LENGTH = 10
SESSION_TTL_SECONDS = 24 * 3600
DEFAULT_PBKDF2_ITERATIONS = 60_000

# roles allowed to see demographic attributes anywhere in the API
DEMOGRAPHIC_ROLES = (ROLE_MANAGER, ROLE_ADMIN)


class AuthError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class Account:
    account_id: str
    login: str
    password_hash: str  # "pbkdf2$<iterations>$<salt-hex>$<digest-hex>"
    role: str
    created_at: int

    def to_dict(self) -> dict:
        return {
            "account_id": self.account_id,
            "login": self.login,
            "password_hash": self.password_hash,
            "role": self.role,
            "created_at": self.created_at,
        }

    @staticmethod
    def from_dict(obj: dict) -> "Account":
        return Account(
            account_id=obj["account_id"],
            login=obj["login"],
            password_hash=obj["password_hash"],
            role=obj["role"],
            created_at=obj["created_at"],
        )


@dataclass
class Session:
    token: str
    account_id: str
    expires_at: int

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "account_id": self.account_id,
            "expires_at": self.expires_at,
        }

    @staticmethod
    def from_dict(obj: dict) -> "Session":
        return Session(
            token=obj["token"],
            account_id=obj["account_id"],
            expires_at=obj["expires_at"],
        )


def hash_password(password: str, iterations: int = DEFAULT_PBKDF2_ITERATIONS) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)
    return f"pbkdf2${iterations}${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, iterations, salt_hex, digest_hex = stored.split("$")
        if scheme != "pbkdf2":
            return False
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), bytes.fromhex(salt_hex), int(iterations)
        )
        return hmac.compare_digest(digest.hex(), digest_hex)
    except (ValueError, TypeError):
        return False


class AccountRegistry:
    """Account/session state backed by a ProjectStore's documents."""

    def __init__(self, store, pbkdf2_iterations: int = DEFAULT_PBKDF2_ITERATIONS):
        self.store = store
        self.iterations = pbkdf2_iterations
        # a constant-cost hash for unknown logins keeps the failure path's
        # timing aligned with the success path
        self._decoy_hash = hash_password("decoy-password-value", pbkdf2_iterations)

    # ---- persistence ----

    def _accounts(self) -> list[Account]:
        return [Account.from_dict(o) for o in self.store.read_doc("accounts", [])]

    def _save_accounts(self, accounts: list[Account]) -> None:
        self.store.write_doc("accounts", [a.to_dict() for a in accounts])

    def _sessions(self) -> list[Session]:
        return [Session.from_dict(o) for o in self.store.read_doc("sessions", [])]

    def _save_sessions(self, sessions: list[Session]) -> None:
        self.store.write_doc("sessions", [s.to_dict() for s in sessions])

    def _audit(self, entry: dict) -> None:
        log = self.store.read_doc("audit", [])
        log.append(entry)
        self.store.write_doc("audit", log)

    # ---- operations ----

    def signup(self, login: str, password: str, now: int | None = None) -> Account:
        if len(password) < MIN_PASSWORD_LENGTH:
            raise AuthError(
                "weak_password", f"password must be >= {MIN_PASSWORD_LENGTH} characters"
            )
        accounts = self._accounts()
        if any(a.login == login for a in accounts):
            raise AuthError("conflict", f"login {login!r} already taken")
        account = Account(
            account_id=f"acct-{secrets.token_hex(8)}",
            login=login,
            password_hash=hash_password(password, self.iterations),
            role=ROLE_PENDING,
            created_at=int(now if now is not None else time.time()),
        )
        accounts.append(account)
        self._save_accounts(accounts)
        return account

    def create_admin(self, login: str, password: str, now: int | None = None) -> Account:
        """Bootstrap path used by the CLI, not exposed over HTTP."""
        account = self.signup(login, password, now=now)
        return self.set_role(account.account_id, ROLE_ADMIN)

    def set_role(self, account_id: str, role: str) -> Account:
        if role not in ROLES:
            raise AuthError("bad_role", f"unknown role {role!r}")
        accounts = self._accounts()
        for account in accounts:
            if account.account_id == account_id:
                account.role = role
                self._save_accounts(accounts)
                return account
        raise AuthError("unknown_account", f"unknown account {account_id!r}")

    def pending_accounts(self) -> list[Account]:
        return [a for a in self._accounts() if a.role == ROLE_PENDING]

    def approve(self, admin: Account, account_id: str, now: int | None = None) -> Account:
        if admin.role != ROLE_ADMIN:
            raise AuthError("forbidden", "only admins may approve accounts")
        accounts = self._accounts()
        target = next((a for a in accounts if a.account_id == account_id), None)
        if target is None:
            raise AuthError("unknown_account", f"unknown account {account_id!r}")
        if target.role != ROLE_PENDING:
            raise AuthError("not_pending", f"account {account_id!r} is already approved")
        target.role = ROLE_MANAGER
        self._save_accounts(accounts)
        self._audit(
            {
                "action": "approve",
                "by": admin.account_id,
                "target": account_id,
                "at": int(now if now is not None else time.time()),
            }
        )
        return target

    def login(self, login: str, password: str, now: int | None = None) -> Session:
        now = int(now if now is not None else time.time())
        accounts = self._accounts()
        account = next((a for a in accounts if a.login == login), None)
        stored = account.password_hash if account else self._decoy_hash
        ok = verify_password(password, stored)
        if account is None or not ok:
            raise AuthError("invalid_credentials", "invalid credentials")
        if account.role == ROLE_PENDING:
            raise AuthError("pending", "account awaiting approval")
        session = Session(
            token=secrets.token_hex(32),
            account_id=account.account_id,
            expires_at=now + SESSION_TTL_SECONDS,
        )
        sessions = [s for s in self._sessions() if s.expires_at > now]
        sessions.append(session)
        self._save_sessions(sessions)
        return session

    def resolve_session(self, token: str | None, now: int | None = None) -> Account | None:
        """Account for a live session token, else None (expired/missing)."""
        if not token:
            return None
        now = int(now if now is not None else time.time())
        session = next((s for s in self._sessions() if s.token == token), None)
        if session is None or session.expires_at <= now:
            return None
        return next(
            (a for a in self._accounts() if a.account_id == session.account_id), None
        )


def can_view_demographics(account: Account | None) -> bool:
    return account is not None and account.role in DEMOGRAPHIC_ROLES
