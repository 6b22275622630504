#!/usr/bin/env python3
"""Writes data/catalogs/synthetic.json, a small catalog in the IFTTT shape.

Output is deterministic; rerun after editing the tables below.
"""

import argparse
import json
import re
from pathlib import Path

S, N, B, D, DT, U, IU = "String", "Number", "Boolean", "Date", "Date with time", "Url", "Image url"

# channel -> (category, triggers, actions)
# trigger: (name, description, [(ingredient, type)], [(label, required, type)])
# action: (name, description, [(label, required, type)])
CHANNELS = {
    "Stocks": ("Finance & payments", [
        ("Price rises above", "This Trigger fires when a stock's price rises above a given value.",
         [("StockName", S), ("Price", N), ("PercentageChange", N), ("CheckTime", DT)],
         [("Ticker symbol", True, S), ("Price", True, N)]),
        ("Today's price rises by percentage", "This Trigger fires when a stock's price rises by a given percentage during the trading day.",
         [("StockName", S), ("Price", N), ("PercentageChange", N), ("CheckTime", DT)],
         [("Ticker symbol", True, S), ("Percentage", True, N)]),
        ("Price drops below", "This Trigger fires when a stock's price drops below a given value.",
         [("StockName", S), ("Price", N), ("PercentageChange", N), ("CheckTime", DT)],
         [("Ticker symbol", True, S), ("Price", True, N)]),
        ("Today's closing price", "This Trigger fires every trading day at market close with the closing price.",
         [("StockName", S), ("ClosingPrice", N), ("CheckTime", DT)],
         [("Ticker symbol", True, S)]),
    ], []),
    "Philips Hue": ("Smart home", [], [
        ("Turn on / change light mode", "This Action will turn on your lights and set them to a color.",
         [("Color", True, S), ("Light", True, S)]),
        ("Blink lights", "This Action will briefly blink the selected lights.",
         [("Which lights", True, S)]),
        ("Turn off lights", "This Action will turn off the selected lights.",
         [("Which lights", True, S)]),
        ("Dim lights", "This Action will dim the selected lights to a brightness level.",
         [("Which lights", True, S), ("Brightness", True, N)]),
    ]),
    "Nest Thermostat": ("Smart home", [
        ("Temperature rises above", "This Trigger fires when the indoor temperature rises above a threshold.",
         [("Temperature", N), ("Humidity", N), ("DeviceName", S), ("MeasuredAt", DT)],
         [("Thermostat", True, S), ("Temperature", True, N)]),
        ("Temperature drops below", "This Trigger fires when the indoor temperature drops below a threshold.",
         [("Temperature", N), ("Humidity", N), ("DeviceName", S), ("MeasuredAt", DT)],
         [("Thermostat", True, S), ("Temperature", True, N)]),
        ("Nest set to Away", "This Trigger fires when your home is set to Away.",
         [("StructureName", S), ("SetAt", DT)], []),
    ], [
        ("Set temperature", "This Action will set your thermostat to a target temperature.",
         [("Thermostat", True, S), ("Temperature", True, N)]),
        ("Set to Away", "This Action will set your home to Away.", [("Structure", True, S)]),
    ]),
    "Weather Underground": ("Environment control & monitoring", [
        ("Tomorrow's forecast calls for rain", "This Trigger fires when tomorrow's forecast calls for rain.",
         [("Condition", S), ("HighTempFahrenheit", N), ("LowTempFahrenheit", N), ("ForecastUrl", U), ("Date", D)],
         [("Location", True, S)]),
        ("Current temperature rises above", "This Trigger fires when the outdoor temperature rises above a value.",
         [("Temperature", N), ("Condition", S), ("CheckTime", DT)],
         [("Location", True, S), ("Temperature", True, N)]),
        ("UV index rises above", "This Trigger fires when the UV index rises above a value.",
         [("UvIndex", N), ("Condition", S), ("CheckTime", DT)],
         [("Location", True, S), ("UV index", True, N)]),
        ("Sunrise", "This Trigger fires at sunrise at your location.",
         [("SunriseAt", DT), ("Condition", S), ("ImageUrl", IU)],
         [("Location", True, S)]),
    ], []),
    "Gmail": ("Email", [
        ("New email in inbox from", "This Trigger fires every time a new email arrives from a specific address.",
         [("FromAddress", S), ("Subject", S), ("Body", S), ("ReceivedAt", DT), ("AttachmentUrl", U)],
         [("From address", True, S)]),
        ("New starred email in inbox", "This Trigger fires every time you star an email.",
         [("FromAddress", S), ("Subject", S), ("Body", S), ("ReceivedAt", DT)], []),
        ("New attachment in inbox", "This Trigger fires every time an email with an attachment arrives.",
         [("FromAddress", S), ("Subject", S), ("AttachmentUrl", U), ("AttachmentFilename", S), ("ReceivedAt", DT)], []),
    ], [
        ("Send an email", "This Action will send an email to up to twenty recipients.",
         [("To address", True, S), ("Subject", True, S), ("Body", True, S), ("Attachment URL", False, U)]),
        ("Send yourself an email", "This Action will send yourself an email.",
         [("Subject", True, S), ("Body", True, S)]),
    ]),
    "The New York Times": ("News & information", [
        ("New article from search", "This Trigger fires every time a new article that is published by The New York Times matches a search query you specify.",
         [("Title", S), ("Author", S), ("Blurb", S), ("ArticleUrl", U), ("ImageUrl", IU), ("Source", S),
          ("Section", S), ("Keywords", S), ("PublishedDate", DT)],
         [("Search for", True, S)]),
        ("New popular article in section", "This Trigger fires when an article becomes popular in a section you choose.",
         [("Title", S), ("Author", S), ("Blurb", S), ("ArticleUrl", U), ("Section", S), ("PublishedDate", DT)],
         [("Section", True, S)]),
    ], []),
    "RSS Feed": ("News & information", [
        ("New feed item", "This Trigger fires every time a new item is added to the feed you specify.",
         [("EntryTitle", S), ("EntryUrl", U), ("EntryContent", S), ("EntryAuthor", S), ("EntryPublished", DT), ("FeedTitle", S)],
         [("Feed URL", True, U)]),
        ("New feed item matches", "This Trigger fires every time a new feed item contains a keyword or phrase.",
         [("EntryTitle", S), ("EntryUrl", U), ("EntryContent", S), ("EntryPublished", DT)],
         [("Keyword or simple phrase", True, S), ("Feed URL", True, U)]),
    ], []),
    "Evernote": ("Popular services", [
        ("New note in notebook", "This Trigger fires every time a new note is created in a notebook.",
         [("Title", S), ("Body", S), ("NotebookName", S), ("CreatedAt", DT), ("NoteUrl", U)],
         [("Notebook", True, S)]),
    ], [
        ("Append to note", "This Action will append to a note as determined by its title and notebook.",
         [("Title", True, S), ("Body", True, S), ("Notebook", False, S), ("Tags", False, S)]),
        ("Create a note", "This Action will create a new note.",
         [("Title", True, S), ("Body", True, S), ("Notebook", False, S), ("Tags", False, S)]),
        ("Create image note from URL", "This Action will download an image and save it in a new note.",
         [("Image URL", True, IU), ("Title", True, S), ("Notebook", False, S)]),
    ]),
    "Google Sheets": ("Productivity", [
        ("New row added to spreadsheet", "This Trigger fires when a new row is added to a spreadsheet.",
         [("RowValues", S), ("SpreadsheetName", S), ("SpreadsheetUrl", U), ("AddedAt", DT)],
         [("Spreadsheet", True, S)]),
    ], [
        ("Add row to spreadsheet", "This Action will add a single row to the bottom of a spreadsheet.",
         [("Spreadsheet name", True, S), ("Formatted row", True, S), ("Drive folder path", False, S)]),
        ("Update cell in spreadsheet", "This Action will update a single cell in a spreadsheet.",
         [("Spreadsheet name", True, S), ("Cell", True, S), ("Value", True, S)]),
    ]),
    "Google Calendar": ("Productivity", [
        ("Event from search starts", "This Trigger fires a set time before an event matching your search starts.",
         [("Title", S), ("Description", S), ("Where", S), ("Starts", DT), ("EventUrl", U)],
         [("Search", True, S), ("Time before", False, N)]),
        ("New event added", "This Trigger fires every time a new event is added to your calendar.",
         [("Title", S), ("Description", S), ("Where", S), ("Starts", DT), ("Ends", DT)], []),
    ], [
        ("Quick add event", "This Action will add an event to your calendar from a short sentence.",
         [("Quick add text", True, S)]),
        ("Create a detailed event", "This Action will create an event with a title, time and location.",
         [("Title", True, S), ("Start time", True, DT), ("End time", False, DT), ("Location", False, S), ("Description", False, S)]),
    ]),
    "Slack": ("Communication", [
        ("New message in channel", "This Trigger fires every time a message is posted to a channel.",
         [("Message", S), ("UserName", S), ("ChannelName", S), ("PostedAt", DT)],
         [("Channel", True, S)]),
    ], [
        ("Post to channel", "This Action will post a message to a Slack channel.",
         [("Channel", True, S), ("Message", True, S), ("Title", False, S), ("Title URL", False, U), ("Thumbnail URL", False, IU)]),
    ]),
    "Twitter": ("Social networks", [
        ("New tweet by you", "This Trigger fires every time you post a new tweet.",
         [("Text", S), ("UserName", S), ("LinkToTweet", U), ("CreatedAt", DT)], []),
        ("New tweet from search", "This Trigger fires every time a new tweet matches your search.",
         [("Text", S), ("UserName", S), ("LinkToTweet", U), ("CreatedAt", DT)],
         [("Search for", True, S)]),
        ("New follower", "This Trigger fires every time someone follows you.",
         [("UserName", S), ("FullName", S), ("ProfileUrl", U), ("FollowedAt", DT)], []),
    ], [
        ("Post a tweet", "This Action will post a new tweet to your account.",
         [("Tweet text", True, S)]),
        ("Post a tweet with image", "This Action will post a tweet with an attached image.",
         [("Tweet text", True, S), ("Image URL", True, IU)]),
    ]),
    "Instagram": ("Photo & video", [
        ("Any new photo by you", "This Trigger fires every time you post a new photo.",
         [("Caption", S), ("Url", U), ("SourceUrl", IU), ("CreatedAt", DT)], []),
        ("New photo by you with specific hashtag", "This Trigger fires every time you post a photo with a hashtag.",
         [("Caption", S), ("Url", U), ("SourceUrl", IU), ("CreatedAt", DT)],
         [("Hashtag", True, S)]),
    ], []),
    "Dropbox": ("Cloud storage", [
        ("New file in your folder", "This Trigger fires every time a new file is added to a folder.",
         [("FileName", S), ("FileUrl", U), ("Path", S), ("AddedAt", DT)],
         [("Folder path", True, S)]),
    ], [
        ("Add file from URL", "This Action will download a file at a given URL and add it to Dropbox.",
         [("File URL", True, U), ("File name", False, S), ("Dropbox folder path", True, S)]),
        ("Create a text file", "This Action will create a text file in Dropbox.",
         [("File name", True, S), ("Content", True, S), ("Dropbox folder path", True, S)]),
    ]),
    "Location": ("Location", [
        ("You enter an area", "This Trigger fires every time you enter an area you specify.",
         [("OccurredAt", DT), ("LocationMapUrl", U), ("LocationMapImageUrl", IU)],
         [("Locate an area", True, S)]),
        ("You exit an area", "This Trigger fires every time you exit an area you specify.",
         [("OccurredAt", DT), ("LocationMapUrl", U), ("LocationMapImageUrl", IU)],
         [("Locate an area", True, S)]),
    ], []),
    "Date & Time": ("Calendars & scheduling", [
        ("Every day at", "This Trigger fires every single day at a specific time set by you.",
         [("CheckTime", DT)], [("Time", True, S)]),
        ("Every hour at", "This Trigger fires once an hour at the minute you specify.",
         [("CheckTime", DT)], [("Minutes past the hour", True, N)]),
        ("Every week on", "This Trigger fires once a week on the days and time you choose.",
         [("CheckTime", DT)], [("Days of the week", True, S), ("Time", True, S)]),
    ], []),
    "Fitbit": ("Health & fitness", [
        ("Daily step goal achieved", "This Trigger fires when you reach your daily step goal.",
         [("Steps", N), ("GoalSteps", N), ("Date", D)], []),
        ("New sleep logged", "This Trigger fires every time a new sleep is logged.",
         [("MinutesAsleep", N), ("Efficiency", N), ("StartTime", DT)], []),
        ("Daily activity summary", "This Trigger fires every day with a summary of your activity.",
         [("Steps", N), ("CaloriesBurned", N), ("DistanceMiles", N), ("Date", D)], []),
    ], [
        ("Log a weight", "This Action will log a weight measurement.", [("Weight", True, N)]),
    ]),
    "Android Device": ("Mobile devices & accessories", [
        ("Connects to a specific WiFi network", "This Trigger fires when your device connects to a WiFi network.",
         [("NetworkName", S), ("OccurredAt", DT)], [("Network name", True, S)]),
        ("Battery is low", "This Trigger fires when your device battery drops to fifteen percent.",
         [("BatteryLevel", N), ("OccurredAt", DT)], []),
        ("Any phone call missed", "This Trigger fires every time you miss a phone call.",
         [("FromNumber", S), ("ContactName", S), ("OccurredAt", DT)], []),
    ], [
        ("Set ringtone volume", "This Action will set the ringtone volume of your device.",
         [("Volume", True, N)]),
        ("Mute ringtone", "This Action will mute your device ringtone.", []),
        ("Send a notification", "This Action will send a notification to your device.",
         [("Message", True, S)]),
    ]),
    "Spotify": ("Music", [
        ("New saved track", "This Trigger fires every time you save a track.",
         [("TrackName", S), ("ArtistName", S), ("AlbumName", S), ("TrackUrl", U), ("SavedAt", DT)], []),
    ], [
        ("Save a track", "This Action will save a track to your library.", [("Track", True, S)]),
        ("Add track to playlist", "This Action will add a track to a playlist.",
         [("Track", True, S), ("Playlist", True, S)]),
    ]),
    "YouTube": ("Photo & video", [
        ("New liked video", "This Trigger fires every time you like a video.",
         [("Title", S), ("Description", S), ("Url", U), ("AuthorName", S), ("LikedAt", DT)], []),
        ("New public video uploaded by you", "This Trigger fires every time you upload a public video.",
         [("Title", S), ("Description", S), ("Url", U), ("EmbedCode", S), ("PublishedAt", DT)], []),
    ], []),
    "Todoist": ("Task management & to-dos", [
        ("New completed task", "This Trigger fires every time a task is completed.",
         [("TaskContent", S), ("ProjectName", S), ("CompletedAt", DT), ("LinkToTask", U)], []),
        ("New task created", "This Trigger fires every time a new task is created.",
         [("TaskContent", S), ("ProjectName", S), ("DueDate", D), ("LinkToTask", U)], []),
    ], [
        ("Create task", "This Action will create a task in a project.",
         [("Task content", True, S), ("Project", False, S), ("Due date", False, D), ("Priority", False, N)]),
    ]),
    "Notifications": ("Communication", [], [
        ("Send a notification from the app", "This Action will send a notification to your phone.",
         [("Message", True, S)]),
        ("Send a rich notification", "This Action will send a rich notification with a link and image.",
         [("Title", True, S), ("Message", True, S), ("Link URL", False, U), ("Image URL", False, IU)]),
    ]),
    "SmartThings": ("Smart home", [
        ("Switched on", "This Trigger fires when a device is switched on.",
         [("DeviceName", S), ("OccurredAt", DT)], [("Which switch", True, S)]),
        ("Door opened", "This Trigger fires when a contact sensor detects the door opened.",
         [("DeviceName", S), ("OccurredAt", DT)], [("Which contact sensor", True, S)]),
    ], [
        ("Switch on", "This Action will switch on a device.", [("Which switch", True, S)]),
        ("Lock", "This Action will lock a smart lock.", [("Which lock", True, S)]),
    ]),
    "Pocket": ("Bookmarking", [], [
        ("Save for later", "This Action will save an article or URL to Pocket.",
         [("URL", True, U), ("Tags", False, S), ("Title", False, S)]),
    ]),
    "Telegram": ("Communication", [], [
        ("Send message", "This Action will send a message to a chat.",
         [("Target chat", True, S), ("Message text", True, S)]),
        ("Send photo", "This Action will send a photo to a chat.",
         [("Target chat", True, S), ("Photo URL", True, IU), ("Caption", False, S)]),
    ]),
    "Trello": ("Task management & to-dos", [
        ("Card added to board", "This Trigger fires every time a card is added to a board.",
         [("CardTitle", S), ("CardDescription", S), ("ListName", S), ("CardUrl", U), ("CreatedAt", DT)],
         [("Board", True, S)]),
    ], [
        ("Create a card", "This Action will create a card on a board.",
         [("Board", True, S), ("List", True, S), ("Title", True, S), ("Description", False, S), ("Labels", False, S)]),
    ]),
    "Ring": ("Security & monitoring systems", [
        ("New motion detected", "This Trigger fires when your doorbell or camera detects motion.",
         [("DeviceName", S), ("ImageUrl", IU), ("DetectedAt", DT)], [("Device", True, S)]),
    ], []),
    "Strava": ("Health & fitness", [
        ("New activity by you", "This Trigger fires every time you log a new activity.",
         [("Name", S), ("ActivityType", S), ("DistanceMeters", N), ("ElapsedTimeInSeconds", N), ("ActivityUrl", U), ("StartedAt", DT)], []),
    ], []),
    "Google Drive": ("Cloud storage", [], [
        ("Upload file from URL", "This Action will download a file at a given URL and add it to Google Drive.",
         [("File URL", True, U), ("File name", False, S), ("Drive folder path", False, S)]),
    ]),
    "WeMo Smart Plug": ("Smart home", [], [
        ("Turn on smart plug", "This Action will turn on your smart plug.", [("Which plug", True, S)]),
        ("Turn off smart plug", "This Action will turn off your smart plug.", [("Which plug", True, S)]),
    ]),
    "Email": ("Email", [], [
        ("Send me an email", "This Action will send you an HTML based email.",
         [("Subject", True, S), ("Body", True, S)]),
    ]),
}


def slugify(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")


def build() -> dict:
    triggers, actions, categories = [], [], set()
    for channel, (category, trs, acts) in CHANNELS.items():
        categories.add(category)
        prefix = slugify(channel)
        for name, desc, ingredients, fields in trs:
            triggers.append({
                "id": f"{prefix}.{slugify(name)}",
                "function_name": name,
                "channel": channel,
                "category": category,
                "description": desc,
                "fields": [{"label": l, "slug": slugify(l), "required": r, "data_type": t} for l, r, t in fields],
                "ingredients": [{"slug": s, "data_type": t} for s, t in ingredients],
            })
        for name, desc, fields in acts:
            actions.append({
                "id": f"{prefix}.{slugify(name)}",
                "function_name": name,
                "channel": channel,
                "category": category,
                "description": desc,
                "fields": [{"label": l, "slug": slugify(l), "required": r, "data_type": t} for l, r, t in fields],
            })
    return {"categories": sorted(categories), "triggers": triggers, "actions": actions}


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("-o", "--output", default=str(Path(__file__).resolve().parent.parent / "data/catalogs/synthetic.json"))
    args = ap.parse_args()
    doc = build()
    Path(args.output).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"{len(doc['triggers'])} triggers, {len(doc['actions'])} actions -> {args.output}")


if __name__ == "__main__":
    main()
